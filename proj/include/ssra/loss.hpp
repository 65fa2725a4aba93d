// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 SSRA Contributors

#pragma once

#include <functional>
#include <vector>

#include <json.hpp>

namespace ssra::loss {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>; // n rows

// One contrastive batch: anchor i's positive is documents[i], its in-batch
// negatives are documents[j != i]. hard_negatives[i], when present, is a
// per-anchor list of extra documents appended to anchor i's softmax
// denominator only.
struct EmbeddingBatch {
    Mat queries;
    Mat documents;
    std::vector<int> labels;
    double temperature = 0.05;
    std::vector<Mat> hard_negatives; // empty, or one (possibly empty) list per anchor

    static EmbeddingBatch from_json(const nlohmann::json& j);
};

struct LossResult {
    double loss = 0.0;
    Mat grad_queries;
    Mat grad_documents;
    std::vector<Mat> grad_hard_negatives;
};

using WeightFn = std::function<double(int label)>;

// w(s) = s/3: label-0 anchors carry no positive-pair loss of their own and
// act purely as negatives for other anchors.
double weight_default(int label);

enum class Similarity { cosine, dot };

// For anchor i over candidates j:
//   z_ij = sim(q_i, d_j) / temperature
//   l_i  = -w(s_i) * log( exp(z_ii) / sum_j exp(z_ij) )
//   loss = sum_i l_i / #{i : w(s_i) > 0}
// Gradients are the exact analytic derivatives of this expression.
LossResult weighted_infonce(const EmbeddingBatch& batch,
                            const WeightFn& weight_fn = weight_default,
                            Similarity similarity = Similarity::cosine);

} // namespace ssra::loss
