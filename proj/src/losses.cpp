#include "stg3net/losses.hpp"
#include "stg3net/log.hpp"

namespace stg3net {

using namespace ad;

void LossWeights::validate() const {
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
        throw ConfigError("lambda must lie in [0, 1]");
    }
    if (!(gamma >= 1.0)) {
        throw ConfigError("gamma must be >= 1");
    }
    if (!(tau > 0.0)) {
        throw ConfigError("tau must be > 0");
    }
}

Var row_cosine(Var a, Var b, double eps) {
    Var dot = row_sum(mul(a, b));
    Var na = clamp_min(row_l2_norm(a), eps);
    Var nb = clamp_min(row_l2_norm(b), eps);
    return div(dot, mul(na, nb));
}

Var sce_loss(Var x, Var z, const std::vector<Index>& masked, double gamma) {
    if (masked.empty()) {
        throw std::invalid_argument("sce_loss: empty masked set");
    }
    Var cos = row_cosine(gather_rows(x, masked), gather_rows(z, masked));
    // Rounding can push cos a hair above 1.
    Var gap = clamp_min(add_scalar(neg(cos), 1.0), 0.0);
    return mean(pow(gap, gamma));
}

Var mse_loss(Var x, Var z, const std::vector<Index>& masked) {
    if (masked.empty()) {
        throw std::invalid_argument("mse_loss: empty masked set");
    }
    Var d = sub(gather_rows(z, masked), gather_rows(x, masked));
    return mean(mul(d, d));
}

Var dis_loss(Var p, const Labels& slice_of, const std::vector<Index>& masked) {
    if (masked.empty()) {
        throw std::invalid_argument("dis_loss: empty masked set");
    }
    std::vector<Index> cols;
    cols.reserve(masked.size());
    for (Index i : masked) {
        cols.push_back(slice_of.at(static_cast<std::size_t>(i)));
    }
    return neg(mean(log(gather(p, masked, cols), kProbFloor)));
}

namespace {

Var zero_scalar(Var like) { return like.tape().constant(Matrix::Zero(1, 1)); }

void split(const TripletSet& t, std::vector<Index>& a, std::vector<Index>& p, std::vector<Index>& n) {
    for (const auto& tr : t.triples) {
        a.push_back(tr[0]);
        p.push_back(tr[1]);
        n.push_back(tr[2]);
    }
}

}

Var triplet_loss(Var h, const TripletSet& triplets, double tau) {
    if (triplets.empty()) {
        logging::warn("triplet_loss: empty triplet set contributes 0");
        return zero_scalar(h);
    }
    std::vector<Index> a, p, n;
    split(triplets, a, p, n);
    Var ha = gather_rows(h, a);
    Var d_pos = row_l2_norm(sub(ha, gather_rows(h, p)));
    Var d_neg = row_l2_norm(sub(ha, gather_rows(h, n)));
    return mean(relu(add_scalar(sub(d_pos, d_neg), tau)));
}

Var contrastive_loss(Var h, const TripletSet& triplets, double temperature) {
    if (triplets.empty()) {
        return zero_scalar(h);
    }
    std::vector<Index> a, p, n;
    split(triplets, a, p, n);
    Var ha = gather_rows(h, a);
    Var s_pos = scale(row_cosine(ha, gather_rows(h, p)), 1.0 / temperature);
    Var s_neg = scale(row_cosine(ha, gather_rows(h, n)), 1.0 / temperature);
    Var lse = log(add(exp(s_pos), exp(s_neg)));
    return mean(sub(lse, s_pos));
}

double total_loss(double sce, double dis, double tri, double lambda) {
    return sce - lambda * dis + (1.0 - lambda) * tri;
}

Var total_loss(Var sce, Var dis, Var tri, double lambda) {
    return add(sub(sce, scale(dis, lambda)), scale(tri, 1.0 - lambda));
}

}
