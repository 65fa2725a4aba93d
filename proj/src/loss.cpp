// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 SSRA Contributors

#include "ssra/loss.hpp"

#include <algorithm>
#include <cmath>

#include "ssra/error.hpp"

namespace ssra::loss {

namespace {

double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

double norm(const Vec& v) {
    return std::sqrt(dot(v, v));
}

void check_vector(const Vec& v, std::size_t dim, const char* what) {
    if (v.size() != dim) {
        throw Error(ErrorKind::precondition,
                    std::string(what) + ": inconsistent vector dimension");
    }
    if (norm(v) == 0.0) {
        throw Error(ErrorKind::precondition, std::string(what) + ": zero-norm vector");
    }
}

} // namespace

double weight_default(int label) {
    return static_cast<double>(label) / 3.0;
}

EmbeddingBatch EmbeddingBatch::from_json(const nlohmann::json& j) {
    EmbeddingBatch batch;
    batch.queries = j.at("queries").get<Mat>();
    batch.documents = j.at("documents").get<Mat>();
    batch.labels = j.at("labels").get<std::vector<int>>();
    if (j.contains("temperature")) {
        batch.temperature = j.at("temperature").get<double>();
    }
    if (j.contains("hard_negatives")) {
        batch.hard_negatives = j.at("hard_negatives").get<std::vector<Mat>>();
    }
    return batch;
}

LossResult weighted_infonce(const EmbeddingBatch& batch, const WeightFn& weight_fn,
                            Similarity similarity) {
    const std::size_t n = batch.queries.size();
    if (n == 0) {
        throw Error(ErrorKind::precondition, "empty batch");
    }
    if (batch.documents.size() != n || batch.labels.size() != n) {
        throw Error(ErrorKind::precondition,
                    "queries, documents and labels must have equal length");
    }
    if (!(batch.temperature > 0.0)) {
        throw Error(ErrorKind::precondition, "temperature must be positive");
    }
    if (!batch.hard_negatives.empty() && batch.hard_negatives.size() != n) {
        throw Error(ErrorKind::precondition,
                    "hard_negatives must be absent or provide one list per anchor");
    }
    const std::size_t dim = batch.queries[0].size();
    if (dim == 0) {
        throw Error(ErrorKind::precondition, "zero-dimensional vectors");
    }
    for (std::size_t i = 0; i < n; ++i) {
        check_vector(batch.queries[i], dim, "queries");
        check_vector(batch.documents[i], dim, "documents");
        if (batch.labels[i] < 0 || batch.labels[i] > 3) {
            throw Error(ErrorKind::precondition,
                        "label out of range: " + std::to_string(batch.labels[i]));
        }
    }
    for (const Mat& extra : batch.hard_negatives) {
        for (const Vec& h : extra) {
            check_vector(h, dim, "hard_negatives");
        }
    }

    std::vector<double> weights(n);
    std::size_t n_positive_weight = 0;
    for (std::size_t i = 0; i < n; ++i) {
        weights[i] = weight_fn(batch.labels[i]);
        if (weights[i] > 0.0) {
            ++n_positive_weight;
        }
    }
    if (n_positive_weight == 0) {
        throw Error(ErrorKind::precondition, "all weights zero");
    }

    const double tau = batch.temperature;
    const bool cosine = similarity == Similarity::cosine;

    // sim and its input-gradients for one (anchor, candidate) pair.
    const auto sim = [&](const Vec& q, const Vec& d) {
        return cosine ? dot(q, d) / (norm(q) * norm(d) * tau) : dot(q, d) / tau;
    };
    // d(sim)/dq into gq, d(sim)/dd into gd, each scaled by `coeff` and
    // accumulated.
    const auto accumulate_sim_grad = [&](const Vec& q, const Vec& d, double coeff,
                                         Vec& gq, Vec& gd) {
        if (!cosine) {
            for (std::size_t t = 0; t < dim; ++t) {
                gq[t] += coeff * d[t] / tau;
                gd[t] += coeff * q[t] / tau;
            }
            return;
        }
        const double nq = norm(q);
        const double nd = norm(d);
        const double c = dot(q, d) / (nq * nd);
        for (std::size_t t = 0; t < dim; ++t) {
            const double qh = q[t] / nq;
            const double dh = d[t] / nd;
            gq[t] += coeff / (tau * nq) * (dh - c * qh);
            gd[t] += coeff / (tau * nd) * (qh - c * dh);
        }
    };

    LossResult result;
    result.grad_queries.assign(n, Vec(dim, 0.0));
    result.grad_documents.assign(n, Vec(dim, 0.0));
    result.grad_hard_negatives.resize(batch.hard_negatives.size());
    for (std::size_t i = 0; i < batch.hard_negatives.size(); ++i) {
        result.grad_hard_negatives[i].assign(batch.hard_negatives[i].size(), Vec(dim, 0.0));
    }

    const double inv_count = 1.0 / static_cast<double>(n_positive_weight);
    double total = 0.0;

    for (std::size_t i = 0; i < n; ++i) {
        const Vec& q = batch.queries[i];
        const Mat* extra = batch.hard_negatives.empty() ? nullptr : &batch.hard_negatives[i];
        const std::size_t m = extra ? extra->size() : 0;

        // Candidates: documents[0..n) then the anchor's hard negatives.
        std::vector<double> z(n + m);
        for (std::size_t j = 0; j < n; ++j) {
            z[j] = sim(q, batch.documents[j]);
        }
        for (std::size_t j = 0; j < m; ++j) {
            z[n + j] = sim(q, (*extra)[j]);
        }

        const double zmax = *std::max_element(z.begin(), z.end());
        double denom = 0.0;
        for (double v : z) {
            denom += std::exp(v - zmax);
        }
        const double log_denom = zmax + std::log(denom);

        const double w = weights[i];
        total += -w * (z[i] - log_denom);

        if (w == 0.0) {
            continue; // zero contribution to loss and gradients
        }

        // dL/dz_ic = w * (p_ic - [c == i]) / n_positive_weight
        for (std::size_t c = 0; c < n + m; ++c) {
            const double p = std::exp(z[c] - log_denom);
            const double coeff = w * (p - (c == i ? 1.0 : 0.0)) * inv_count;
            if (coeff == 0.0) {
                continue;
            }
            if (c < n) {
                accumulate_sim_grad(q, batch.documents[c], coeff, result.grad_queries[i],
                                    result.grad_documents[c]);
            } else {
                accumulate_sim_grad(q, (*extra)[c - n], coeff, result.grad_queries[i],
                                    result.grad_hard_negatives[i][c - n]);
            }
        }
    }

    result.loss = total * inv_count;
    if (!std::isfinite(result.loss)) {
        throw Error(ErrorKind::stage, "non-finite loss");
    }
    return result;
}

} // namespace ssra::loss
