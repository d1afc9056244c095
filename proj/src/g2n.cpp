#include "stg3net/g2n.hpp"
#include "stg3net/log.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <set>

namespace stg3net {

void G2NConfig::validate() const {
    if (kg < 1) {
        throw ConfigError("kg must be >= 1");
    }
    if (kc < 2) {
        throw ConfigError("kc must be >= 2");
    }
    if (n_pos < 2 || n_pos % 2 != 0) {
        throw ConfigError("n_pos must be even and >= 2");
    }
    if (!(tau > 0.0)) {
        throw ConfigError("tau must be > 0");
    }
}

namespace {

struct Lloyd {
    Labels labels;
    double inertia = 0.0;
};

Matrix kmeanspp_centers(const Matrix& x, int k, std::mt19937_64& rng) {
    const Index n = x.rows();
    Matrix centers(k, x.cols());
    std::uniform_int_distribution<Index> pick(0, n - 1);
    centers.row(0) = x.row(pick(rng));
    Vector d2 = (x.rowwise() - centers.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < k; ++c) {
        const double total = d2.sum();
        Index chosen = 0;
        if (total > 0.0) {
            std::uniform_real_distribution<double> u(0.0, total);
            double target = u(rng);
            chosen = n - 1;
            for (Index i = 0; i < n; ++i) {
                target -= d2(i);
                if (target < 0.0) {
                    chosen = i;
                    break;
                }
            }
        } else {
            chosen = pick(rng);
        }
        centers.row(c) = x.row(chosen);
        d2 = d2.cwiseMin((x.rowwise() - centers.row(c)).rowwise().squaredNorm());
    }
    return centers;
}

Lloyd lloyd(const Matrix& x, int k, std::mt19937_64& rng, int max_iterations) {
    const Index n = x.rows();
    Matrix centers = kmeanspp_centers(x, k, rng);
    Labels labels(static_cast<std::size_t>(n), -1);
    Vector dist(n);

    for (int iter = 0; iter < max_iterations; ++iter) {
        bool changed = false;
        for (Index i = 0; i < n; ++i) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                const double d = (x.row(i) - centers.row(c)).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            dist(i) = best_d;
            if (labels[static_cast<std::size_t>(i)] != best) {
                labels[static_cast<std::size_t>(i)] = best;
                changed = true;
            }
        }

        std::vector<Index> sizes(static_cast<std::size_t>(k), 0);
        for (int l : labels) {
            ++sizes[static_cast<std::size_t>(l)];
        }
        for (int c = 0; c < k; ++c) {
            if (sizes[static_cast<std::size_t>(c)] > 0) {
                continue;
            }
            // Repair: move the worst-fitting point of a multi-member cluster.
            Index far = -1;
            for (Index i = 0; i < n; ++i) {
                if (sizes[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])] > 1 && (far < 0 || dist(i) > dist(far))) {
                    far = i;
                }
            }
            if (far < 0) {
                break;
            }
            --sizes[static_cast<std::size_t>(labels[static_cast<std::size_t>(far)])];
            labels[static_cast<std::size_t>(far)] = c;
            sizes[static_cast<std::size_t>(c)] = 1;
            dist(far) = 0.0;
            changed = true;
        }

        if (!changed && iter > 0) {
            break;
        }
        centers.setZero();
        for (Index i = 0; i < n; ++i) {
            centers.row(labels[static_cast<std::size_t>(i)]) += x.row(i);
        }
        for (int c = 0; c < k; ++c) {
            if (sizes[static_cast<std::size_t>(c)] > 0) {
                centers.row(c) /= static_cast<double>(sizes[static_cast<std::size_t>(c)]);
            }
        }
    }

    Lloyd out;
    out.labels = std::move(labels);
    out.inertia = kmeans_inertia(x, out.labels);
    return out;
}

Labels renumber(const Labels& labels) {
    Labels out;
    out.reserve(labels.size());
    std::vector<int> seen;
    for (int l : labels) {
        auto it = std::find(seen.begin(), seen.end(), l);
        if (it == seen.end()) {
            seen.push_back(l);
            out.push_back(static_cast<int>(seen.size()) - 1);
        } else {
            out.push_back(static_cast<int>(it - seen.begin()));
        }
    }
    return out;
}

int count_slices(const Labels& slice_of) {
    if (slice_of.empty()) {
        return 0;
    }
    std::set<int> distinct(slice_of.begin(), slice_of.end());
    if (*distinct.begin() < 0) {
        throw DataError("slice labels must be non-negative");
    }
    return static_cast<int>(distinct.size());
}

std::vector<Index> top_k_by_similarity(const RowVector& sims, const std::vector<Index>& ids, Index k) {
    std::vector<Index> order(ids.size());
    std::iota(order.begin(), order.end(), Index{0});
    const auto kk = std::min<Index>(k, static_cast<Index>(ids.size()));
    std::partial_sort(order.begin(), order.begin() + kk, order.end(), [&](Index a, Index b) {
        if (sims(a) != sims(b)) {
            return sims(a) > sims(b);
        }
        return ids[static_cast<std::size_t>(a)] < ids[static_cast<std::size_t>(b)];
    });
    std::vector<Index> out;
    out.reserve(static_cast<std::size_t>(kk));
    for (Index m = 0; m < kk; ++m) {
        out.push_back(ids[static_cast<std::size_t>(order[static_cast<std::size_t>(m)])]);
    }
    return out;
}

Matrix take_rows(const Matrix& m, const std::vector<Index>& rows) {
    Matrix out(static_cast<Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.row(static_cast<Index>(i)) = m.row(rows[i]);
    }
    return out;
}

}

double kmeans_inertia(const Matrix& points, const Labels& labels) {
    int k = 0;
    for (int l : labels) {
        k = std::max(k, l + 1);
    }
    Matrix centers = Matrix::Zero(k, points.cols());
    std::vector<double> sizes(static_cast<std::size_t>(k), 0.0);
    for (Index i = 0; i < points.rows(); ++i) {
        centers.row(labels[static_cast<std::size_t>(i)]) += points.row(i);
        sizes[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])] += 1.0;
    }
    for (int c = 0; c < k; ++c) {
        if (sizes[static_cast<std::size_t>(c)] > 0) {
            centers.row(c) /= sizes[static_cast<std::size_t>(c)];
        }
    }
    double total = 0.0;
    for (Index i = 0; i < points.rows(); ++i) {
        total += (points.row(i) - centers.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
    }
    return total;
}

Labels kmeans(const Matrix& points, int k, std::uint64_t seed, KMeansOptions options) {
    if (k < 1) {
        throw ConfigError("kmeans: k must be >= 1");
    }
    if (points.rows() < k) {
        throw DataError("kmeans: fewer points (" + std::to_string(points.rows()) + ") than clusters (" +
                        std::to_string(k) + ")");
    }
    if (!points.allFinite()) {
        throw NumericError("kmeans: non-finite input");
    }
    Lloyd best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (int r = 0; r < std::max(1, options.restarts); ++r) {
        std::mt19937_64 rng(derive_seed(seed, {static_cast<std::uint64_t>(r)}));
        auto run = lloyd(points, k, rng, options.max_iterations);
        if (run.inertia < best.inertia) {
            best = std::move(run);
        }
    }
    return renumber(best.labels);
}

Matrix unit_rows(const Matrix& m) {
    Matrix out = m;
    for (Index i = 0; i < out.rows(); ++i) {
        const double n = out.row(i).norm();
        if (n > 0.0) {
            out.row(i) /= n;
        }
    }
    return out;
}

TripletSet select_g2n_pairs(const Matrix& h, const Labels& slice_of, const G2NConfig& config, PassCounter* counter,
                            Labels* cluster_labels) {
    config.validate();
    if (static_cast<std::size_t>(h.rows()) != slice_of.size()) {
        throw DataError("select_g2n_pairs: slice labels do not match embedding rows");
    }
    if (!h.allFinite()) {
        throw NumericError("select_g2n_pairs: non-finite embedding");
    }
    const int n_slices = count_slices(slice_of);
    if (n_slices < 2) {
        throw DataError("select_g2n_pairs: need at least 2 slices");
    }

    const Labels clusters = kmeans(h, config.kc, derive_seed(config.seed, {0x6b6d}));
    if (cluster_labels) {
        *cluster_labels = clusters;
    }
    const Matrix unit = unit_rows(h);
    const auto half = static_cast<std::size_t>(config.n_pos / 2);

    std::set<int> slice_set(slice_of.begin(), slice_of.end());
    TripletSet out;
    out.tau = config.tau;
    for (int s : slice_set) {
        std::vector<Index> own, others;
        for (std::size_t i = 0; i < slice_of.size(); ++i) {
            (slice_of[i] == s ? own : others).push_back(static_cast<Index>(i));
        }
        if (counter) {
            ++counter->g2n_passes;
        }
        const Matrix sims = take_rows(unit, own) * take_rows(unit, others).transpose();

        for (std::size_t a = 0; a < own.size(); ++a) {
            const Index anchor = own[a];
            const int cluster = clusters[static_cast<std::size_t>(anchor)];

            std::vector<Index> candidates;
            for (Index j : top_k_by_similarity(sims.row(static_cast<Index>(a)), others, config.kg)) {
                if (clusters[static_cast<std::size_t>(j)] == cluster) {
                    candidates.push_back(j);
                }
            }
            if (candidates.empty()) {
                continue;
            }
            std::vector<Index> negatives;
            for (Index j : own) {
                if (clusters[static_cast<std::size_t>(j)] != cluster) {
                    negatives.push_back(j);
                }
            }
            if (negatives.empty()) {
                continue;
            }

            std::mt19937_64 rng(derive_seed(config.seed, {0x616e, static_cast<std::uint64_t>(anchor)}));
            std::shuffle(candidates.begin(), candidates.end(), rng);
            std::shuffle(negatives.begin(), negatives.end(), rng);
            const auto m = std::min({half, candidates.size(), negatives.size()});
            for (std::size_t j = 0; j < m; ++j) {
                out.triples.push_back({anchor, candidates[j], negatives[j]});
            }
        }
    }
    if (out.empty()) {
        logging::warn("G2N selection produced no triplets");
    }
    return out;
}

std::vector<std::pair<Index, Index>> select_mnn_pairs(const Matrix& h, const Labels& slice_of, int k,
                                                      PassCounter* counter) {
    if (k < 1) {
        throw ConfigError("mnn: k must be >= 1");
    }
    if (static_cast<std::size_t>(h.rows()) != slice_of.size()) {
        throw DataError("select_mnn_pairs: slice labels do not match embedding rows");
    }
    if (count_slices(slice_of) < 2) {
        throw DataError("select_mnn_pairs: need at least 2 slices");
    }
    const Matrix unit = unit_rows(h);
    std::set<int> slice_set(slice_of.begin(), slice_of.end());
    std::vector<int> slices(slice_set.begin(), slice_set.end());

    std::vector<std::pair<Index, Index>> pairs;
    for (std::size_t si = 0; si < slices.size(); ++si) {
        for (std::size_t ti = si + 1; ti < slices.size(); ++ti) {
            if (counter) {
                ++counter->mnn_passes;
            }
            std::vector<Index> rows_s, rows_t;
            for (std::size_t i = 0; i < slice_of.size(); ++i) {
                if (slice_of[i] == slices[si]) rows_s.push_back(static_cast<Index>(i));
                if (slice_of[i] == slices[ti]) rows_t.push_back(static_cast<Index>(i));
            }
            const Matrix sims = take_rows(unit, rows_s) * take_rows(unit, rows_t).transpose();
            std::vector<std::set<Index>> from_t(rows_t.size());
            for (std::size_t j = 0; j < rows_t.size(); ++j) {
                auto nn = top_k_by_similarity(sims.col(static_cast<Index>(j)).transpose(), rows_s, k);
                from_t[j].insert(nn.begin(), nn.end());
            }
            std::vector<Index> pos_in_t(slice_of.size(), -1);
            for (std::size_t j = 0; j < rows_t.size(); ++j) {
                pos_in_t[static_cast<std::size_t>(rows_t[j])] = static_cast<Index>(j);
            }
            for (std::size_t i = 0; i < rows_s.size(); ++i) {
                for (Index j : top_k_by_similarity(sims.row(static_cast<Index>(i)), rows_t, k)) {
                    if (from_t[static_cast<std::size_t>(pos_in_t[static_cast<std::size_t>(j)])].count(rows_s[i])) {
                        pairs.emplace_back(rows_s[i], j);
                    }
                }
            }
        }
    }
    return pairs;
}

}
