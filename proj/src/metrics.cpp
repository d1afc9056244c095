#include "stg3net/metrics.hpp"
#include "stg3net/g2n.hpp"
#include "stg3net/graph.hpp"

#include "json.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>

namespace stg3net::metrics {

namespace {

void require_same_length(const Labels& a, const Labels& b, const char* what) {
    if (a.size() != b.size()) {
        throw DataError(std::string(what) + ": label vectors differ in length (" + std::to_string(a.size()) + " vs " +
                        std::to_string(b.size()) + ")");
    }
}

/** Dense contingency table over compacted label values. */
struct Contingency {
    Matrix table;
    Vector row_sums;
    Vector col_sums;
    double n = 0.0;
};

std::vector<int> compact(const Labels& labels, int& count) {
    std::map<int, int> ids;
    for (int l : labels) {
        ids.emplace(l, 0);
    }
    int next = 0;
    for (auto& [k, v] : ids) {
        v = next++;
    }
    count = next;
    std::vector<int> out;
    out.reserve(labels.size());
    for (int l : labels) {
        out.push_back(ids[l]);
    }
    return out;
}

Contingency contingency(const Labels& a, const Labels& b) {
    int na = 0, nb = 0;
    auto ca = compact(a, na);
    auto cb = compact(b, nb);
    Contingency c;
    c.table = Matrix::Zero(na, nb);
    for (std::size_t i = 0; i < a.size(); ++i) {
        c.table(ca[i], cb[i]) += 1.0;
    }
    c.row_sums = c.table.rowwise().sum();
    c.col_sums = c.table.colwise().sum().transpose();
    c.n = static_cast<double>(a.size());
    return c;
}

double entropy(const Vector& counts, double n) {
    double h = 0.0;
    for (Index i = 0; i < counts.size(); ++i) {
        if (counts(i) > 0.0) {
            const double p = counts(i) / n;
            h -= p * std::log(p);
        }
    }
    return h;
}

double mutual_information(const Contingency& c) {
    double mi = 0.0;
    for (Index i = 0; i < c.table.rows(); ++i) {
        for (Index j = 0; j < c.table.cols(); ++j) {
            const double nij = c.table(i, j);
            if (nij > 0.0) {
                mi += nij / c.n * std::log(c.n * nij / (c.row_sums(i) * c.col_sums(j)));
            }
        }
    }
    return std::max(mi, 0.0);
}

double choose2(double x) { return x * (x - 1.0) / 2.0; }

Matrix zscore_columns(const Matrix& coords) {
    Matrix z = coords;
    for (Index c = 0; c < z.cols(); ++c) {
        const double mu = z.col(c).mean();
        z.col(c).array() -= mu;
        const double sd = std::sqrt(z.col(c).squaredNorm() / static_cast<double>(z.rows()));
        if (sd > 0.0) {
            z.col(c) /= sd;
        }
    }
    return z;
}

}

double ari(const Labels& a, const Labels& b) {
    require_same_length(a, b, "ari");
    if (a.size() < 2) {
        throw DataError("ari: need at least 2 labels");
    }
    auto c = contingency(a, b);
    double index = 0.0;
    for (Index i = 0; i < c.table.rows(); ++i) {
        for (Index j = 0; j < c.table.cols(); ++j) {
            index += choose2(c.table(i, j));
        }
    }
    double sum_a = 0.0, sum_b = 0.0;
    for (Index i = 0; i < c.row_sums.size(); ++i) sum_a += choose2(c.row_sums(i));
    for (Index j = 0; j < c.col_sums.size(); ++j) sum_b += choose2(c.col_sums(j));
    // Scaled by the total pair count so small tables stay in exact integer arithmetic.
    const double pairs = choose2(c.n);
    const double expected = sum_a * sum_b;
    const double max_index = 0.5 * pairs * (sum_a + sum_b);
    if (max_index == expected) {
        return 1.0;
    }
    return (pairs * index - expected) / (max_index - expected);
}

double nmi(const Labels& a, const Labels& b) {
    require_same_length(a, b, "nmi");
    if (a.empty()) {
        throw DataError("nmi: empty labels");
    }
    auto c = contingency(a, b);
    const double ha = entropy(c.row_sums, c.n);
    const double hb = entropy(c.col_sums, c.n);
    const double denom = 0.5 * (ha + hb);
    if (denom == 0.0) {
        return 1.0;
    }
    return std::clamp(mutual_information(c) / denom, 0.0, 1.0);
}

double homogeneity(const Labels& truth, const Labels& pred) {
    require_same_length(truth, pred, "homogeneity");
    if (truth.empty()) {
        throw DataError("homogeneity: empty labels");
    }
    auto c = contingency(truth, pred);
    const double h_truth = entropy(c.row_sums, c.n);
    if (h_truth == 0.0) {
        return 1.0;
    }
    // H(truth | pred) = H(truth) - MI
    return std::clamp(mutual_information(c) / h_truth, 0.0, 1.0);
}

double completeness(const Labels& truth, const Labels& pred) {
    require_same_length(truth, pred, "completeness");
    if (truth.empty()) {
        throw DataError("completeness: empty labels");
    }
    auto c = contingency(truth, pred);
    const double h_pred = entropy(c.col_sums, c.n);
    if (h_pred == 0.0) {
        return 1.0;
    }
    return std::clamp(mutual_information(c) / h_pred, 0.0, 1.0);
}

double accuracy(double nmi, double hom, double com) { return (nmi + hom + com) / 3.0; }

double chaos(const Matrix& coords, const Labels& labels) {
    if (static_cast<std::size_t>(coords.rows()) != labels.size()) {
        throw DataError("chaos: coordinates and labels differ in length");
    }
    const Matrix z = zscore_columns(coords);
    std::map<int, std::vector<Index>> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        members[labels[i]].push_back(static_cast<Index>(i));
    }
    double weighted = 0.0;
    double weight = 0.0;
    for (const auto& [label, rows] : members) {
        if (rows.size() < 2) {
            continue;
        }
        double total = 0.0;
        for (Index i : rows) {
            double best = std::numeric_limits<double>::infinity();
            for (Index j : rows) {
                if (j != i) {
                    best = std::min(best, (z.row(i) - z.row(j)).squaredNorm());
                }
            }
            total += std::sqrt(best);
        }
        const double n = static_cast<double>(rows.size());
        weighted += n * (total / n);
        weight += n;
    }
    if (weight == 0.0) {
        throw DataError("chaos: every cluster is a singleton");
    }
    return weighted / weight;
}

double pas(const Matrix& coords, const Labels& labels, Index k) {
    if (static_cast<std::size_t>(coords.rows()) != labels.size()) {
        throw DataError("pas: coordinates and labels differ in length");
    }
    if (coords.rows() <= k) {
        throw DataError("pas: need more than " + std::to_string(k) + " spots");
    }
    const auto nn = nearest_neighbors(coords, k);
    const Index threshold = k / 2 + 1;
    Index anomalous = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        Index differ = 0;
        for (Index j : nn[i]) {
            differ += labels[static_cast<std::size_t>(j)] != labels[i];
        }
        anomalous += differ >= threshold;
    }
    return static_cast<double>(anomalous) / static_cast<double>(labels.size());
}

double consistency(double chaos, double pas) { return 0.5 * (chaos + pas); }

Vector lisi(const Matrix& embedding, const Labels& labels, Index k) {
    if (static_cast<std::size_t>(embedding.rows()) != labels.size()) {
        throw DataError("lisi: embedding and labels differ in length");
    }
    if (embedding.rows() <= k) {
        throw DataError("lisi: need more than " + std::to_string(k) + " points");
    }
    int n_labels = 0;
    auto ids = compact(labels, n_labels);
    const auto nn = nearest_neighbors(embedding, k);
    Vector out(embedding.rows());
    std::vector<double> counts(static_cast<std::size_t>(n_labels));
    for (std::size_t i = 0; i < nn.size(); ++i) {
        std::fill(counts.begin(), counts.end(), 0.0);
        for (Index j : nn[i]) {
            counts[static_cast<std::size_t>(ids[static_cast<std::size_t>(j)])] += 1.0;
        }
        double simpson = 0.0;
        for (double c : counts) {
            const double p = c / static_cast<double>(k);
            simpson += p * p;
        }
        out(static_cast<Index>(i)) = 1.0 / simpson;
    }
    return out;
}

double median(std::vector<double> values) {
    if (values.empty()) {
        throw DataError("median of an empty set");
    }
    std::sort(values.begin(), values.end());
    const std::size_t m = values.size();
    return m % 2 ? values[m / 2] : 0.5 * (values[m / 2 - 1] + values[m / 2]);
}

double median(const Vector& values) { return median(std::vector<double>(values.data(), values.data() + values.size())); }

double f1_from_norms(double domain_norm, double batch_norm) {
    const double denom = 1.0 - domain_norm + batch_norm;
    if (denom == 0.0) {
        return 0.0;
    }
    return 2.0 * (1.0 - domain_norm) * batch_norm / denom;
}

double f1_lisi(const Vector& lisi_batch, const Vector& lisi_domain, int n_batches, int n_domains) {
    if (n_batches < 2 || n_domains < 2) {
        throw DataError("f1_lisi: need at least 2 batches and 2 domains");
    }
    const double batch_norm = std::clamp((median(lisi_batch) - 1.0) / (n_batches - 1), 0.0, 1.0);
    const double domain_norm = std::clamp((median(lisi_domain) - 1.0) / (n_domains - 1), 0.0, 1.0);
    return f1_from_norms(domain_norm, batch_norm);
}

namespace {

struct Centered {
    Vector z;
    double ss = 0.0;
    double w_total = 0.0;
};

Centered center_for_autocorrelation(const Vector& x, const SparseMatrix& w, const char* what) {
    if (w.rows() != x.size() || w.cols() != x.size()) {
        throw DataError(std::string(what) + ": weight matrix does not match vector length");
    }
    Centered c;
    c.z = x.array() - x.mean();
    c.ss = c.z.squaredNorm();
    if (x.size() == 0 || x.maxCoeff() == x.minCoeff() || !(c.ss > 0.0)) {
        throw DataError(std::string(what) + ": zero variance");
    }
    c.w_total = w.sum();
    if (!(c.w_total > 0.0)) {
        throw DataError(std::string(what) + ": empty weight matrix");
    }
    return c;
}

}

double morans_i(const Vector& x, const SparseMatrix& weights) {
    auto c = center_for_autocorrelation(x, weights, "morans_i");
    double cross = 0.0;
    for (Index r = 0; r < weights.outerSize(); ++r) {
        for (SparseMatrix::InnerIterator it(weights, r); it; ++it) {
            cross += it.value() * c.z(it.row()) * c.z(it.col());
        }
    }
    const double n = static_cast<double>(x.size());
    return n / c.w_total * cross / c.ss;
}

double gearys_c(const Vector& x, const SparseMatrix& weights) {
    auto c = center_for_autocorrelation(x, weights, "gearys_c");
    double diff = 0.0;
    for (Index r = 0; r < weights.outerSize(); ++r) {
        for (SparseMatrix::InnerIterator it(weights, r); it; ++it) {
            const double d = x(it.row()) - x(it.col());
            diff += it.value() * d * d;
        }
    }
    const double n = static_cast<double>(x.size());
    return (n - 1.0) / (2.0 * c.w_total) * diff / c.ss;
}

Labels cluster_latent(const Matrix& h, int n_domains, std::uint64_t seed) {
    if (n_domains < 1) {
        throw ConfigError("cluster_latent: number of domains must be >= 1");
    }
    return kmeans(h, n_domains, seed);
}

Matrix pca(const Matrix& x, Index n_components) {
    Matrix centered = x.rowwise() - x.colwise().mean();
    Matrix cov = centered.transpose() * centered / std::max<double>(1.0, static_cast<double>(x.rows() - 1));
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
    const Index k = std::min(n_components, x.cols());
    // Eigenvalues come back ascending.
    Matrix basis = eig.eigenvectors().rightCols(k).rowwise().reverse();
    return centered * basis;
}

int n_distinct(const Labels& labels) {
    int n = 0;
    compact(labels, n);
    return n;
}

std::string MetricsReport::to_json() const {
    nlohmann::ordered_json j;
    auto put = [&](const char* key, double v) {
        if (std::isfinite(v)) {
            j[key] = v;
        } else {
            j[key] = nullptr;
        }
    };
    put("ari", ari);
    put("nmi", nmi);
    put("hom", hom);
    put("com", com);
    put("accuracy", accuracy);
    put("chaos", chaos);
    put("pas", pas);
    put("consistency", consistency);
    put("lisi_batch", lisi_batch_median);
    put("lisi_domain", lisi_domain_median);
    put("f1_lisi", f1_lisi);
    auto put_array = [&](const char* key, const std::vector<double>& values) {
        if (values.empty()) {
            return;
        }
        auto arr = nlohmann::ordered_json::array();
        for (double v : values) {
            arr.push_back(std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr));
        }
        j[key] = std::move(arr);
    };
    put_array("morans_i", morans_i);
    put_array("gearys_c", gearys_c);
    return j.dump(2) + "\n";
}

MetricsReport evaluate(const EvaluationInput& in) {
    const std::size_t n = in.predicted.size();
    if (in.slice_of.size() != n || static_cast<std::size_t>(in.coords.rows()) != n ||
        static_cast<std::size_t>(in.embedding.rows()) != n || (in.truth && in.truth->size() != n)) {
        throw DataError("evaluate: inputs differ in number of spots");
    }
    MetricsReport r;
    if (in.truth) {
        r.ari = ari(*in.truth, in.predicted);
        r.nmi = nmi(*in.truth, in.predicted);
        r.hom = homogeneity(*in.truth, in.predicted);
        r.com = completeness(*in.truth, in.predicted);
        r.accuracy = accuracy(r.nmi, r.hom, r.com);
    }

    std::map<int, std::vector<Index>> by_slice;
    for (std::size_t i = 0; i < n; ++i) {
        by_slice[in.slice_of[i]].push_back(static_cast<Index>(i));
    }
    double chaos_sum = 0.0, pas_sum = 0.0;
    for (const auto& [s, rows] : by_slice) {
        Matrix c(static_cast<Index>(rows.size()), in.coords.cols());
        Labels l;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            c.row(static_cast<Index>(i)) = in.coords.row(rows[i]);
            l.push_back(in.predicted[static_cast<std::size_t>(rows[i])]);
        }
        chaos_sum += chaos(c, l);
        pas_sum += pas(c, l, in.pas_k);
    }
    r.chaos = chaos_sum / static_cast<double>(by_slice.size());
    r.pas = pas_sum / static_cast<double>(by_slice.size());
    r.consistency = consistency(r.chaos, r.pas);

    const Labels& domains = in.truth ? *in.truth : in.predicted;
    Vector lb = lisi(in.embedding, in.slice_of, in.lisi_k);
    Vector ld = lisi(in.embedding, domains, in.lisi_k);
    r.lisi_batch_median = median(lb);
    r.lisi_domain_median = median(ld);
    const int n_batches = n_distinct(in.slice_of);
    const int n_domains = n_distinct(domains);
    if (n_batches >= 2 && n_domains >= 2) {
        r.f1_lisi = f1_lisi(lb, ld, n_batches, n_domains);
    }

    if (in.denoised && in.spatial_weights) {
        const auto& z = *in.denoised;
        for (Index g = 0; g < z.cols(); ++g) {
            Vector x = z.col(g);
            if (x.maxCoeff() > x.minCoeff()) {
                r.morans_i.push_back(morans_i(x, *in.spatial_weights));
                r.gearys_c.push_back(gearys_c(x, *in.spatial_weights));
            } else {
                r.morans_i.push_back(std::nan(""));
                r.gearys_c.push_back(std::nan(""));
            }
        }
    }
    return r;
}

}
