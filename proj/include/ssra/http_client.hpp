// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 SSRA Contributors

#pragma once

#include <optional>
#include <string>

#include "ssra/modelio.hpp"

namespace ssra::modelio {

// Templates for the five prompt duties. Defaults are editable
// reconstructions shipped under prompts/; load_file() overrides any of them.
struct RoleTemplates {
    PromptTemplate score;
    PromptTemplate query;
    PromptTemplate judge;
    PromptTemplate rewrite;
    PromptTemplate reasoning;

    static RoleTemplates defaults();
};

// Wire client for a chat-completions endpoint:
// POST {base_url}/v1/chat/completions with
// {"model":..., "messages":[{"role":"user","content":...}], "temperature":...}
// and the assistant message content as the reply. A bearer token is attached
// when api_key is non-empty (SSRA_API_KEY).
class ChatEndpoint {
public:
    ChatEndpoint(EndpointConfig config, std::string api_key);

    // One POST, no retries; throws ModelError(endpoint) on transport or
    // protocol trouble.
    std::string complete(const std::string& prompt) const;

    const EndpointConfig& config() const { return config_; }

private:
    EndpointConfig config_;
    std::string api_key_;
};

// All four model roles (plus reasoning collection) over one endpoint.
// Each operation retries transport and grammar failures alike under the
// endpoint's retry policy.
class HttpModelClient : public ScoreClient,
                        public QueryClient,
                        public JudgeClient,
                        public RewriteClient,
                        public ReasoningClient {
public:
    HttpModelClient(EndpointConfig config, std::string api_key,
                    RoleTemplates templates = RoleTemplates::defaults());

    ScoreJudgment score(const Query& query, const Document& doc) override;
    Query generate_query(const Document& doc, RelevanceLabel target) override;
    OrderJudgment judge_order(const Document& doc, const Query& query_a,
                              const Query& query_b) override;
    std::optional<std::string> rewrite_item(const std::string& ocr,
                                            const std::string& asr) override;
    std::string rationale(const Query& query, const Document& doc,
                          RelevanceLabel label) override;

private:
    ChatEndpoint endpoint_;
    RoleTemplates templates_;
};

} // namespace ssra::modelio
