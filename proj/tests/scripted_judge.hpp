#pragma once

#include <atomic>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "ragfce/decompose.hpp"
#include "ragfce/error.hpp"
#include "ragfce/llm_client.hpp"

namespace ragfce::testing {

/// Judge double driven by a table instead of text rules: each answer maps to
/// its segments, each segment to a fact and a logic outcome. Counts calls per
/// stage and keeps every user prompt it saw. Works with the zh assets.
class TableJudge : public ChatBackend {
 public:
  struct Outcome {
    bool fact = true;
    bool logic = true;
  };

  void add_answer(const std::string& answer, const std::vector<std::string>& segments) {
    std::lock_guard lock(mutex_);
    segments_[answer] = segments;
  }
  void set_outcome(const std::string& segment, Outcome o) {
    std::lock_guard lock(mutex_);
    outcomes_[segment] = o;
  }

  ChatResponse complete(const ChatRequest& req) override {
    req.validate();
    const std::string& user = req.first_user_content();
    std::lock_guard lock(mutex_);
    prompts_.push_back(user);
    ChatResponse resp;
    if (user.starts_with("【任务：答案拆分】")) {
      ++decompose_calls;
      const std::string marker = "待拆分答案：\n";
      const auto at = user.rfind(marker);
      const auto end = user.find("\n\n", at);
      const auto answer = user.substr(at + marker.size(), end - at - marker.size());
      const auto it = segments_.find(answer);
      if (it == segments_.end()) throw Error(ErrorCode::MockMiss, "unknown answer");
      resp.content = render_numbered(it->second);
    } else if (user.starts_with("【任务：事实一致性评估】")) {
      ++fact_calls;
      resp.content = std::string("分析完毕。\nVERDICT: ") + (outcome(user).fact ? "CONSISTENT" : "INCONSISTENT");
    } else if (user.starts_with("【任务：逻辑一致性评估】")) {
      ++logic_calls;
      resp.content = std::string("分析完毕。\nVERDICT: ") + (outcome(user).logic ? "CONSISTENT" : "INCONSISTENT");
    } else {
      throw Error(ErrorCode::MockMiss, "unrecognized prompt");
    }
    resp.completion_tokens = resp.content.size();
    return resp;
  }
  [[nodiscard]] std::string name() const override { return "table-judge"; }

  std::vector<std::string> prompts() const {
    std::lock_guard lock(mutex_);
    return prompts_;
  }

  std::atomic<int> decompose_calls{0};
  std::atomic<int> fact_calls{0};
  std::atomic<int> logic_calls{0};

 private:
  Outcome outcome(const std::string& user) const {
    const std::string marker = "答案片段：\n";
    const auto at = user.find(marker);
    if (at == std::string::npos) throw Error(ErrorCode::MockMiss, "no segment in prompt");
    const auto end = user.find("\n\n", at);
    const auto seg = user.substr(at + marker.size(), end - at - marker.size());
    const auto it = outcomes_.find(seg);
    if (it == outcomes_.end()) throw Error(ErrorCode::MockMiss, "unknown segment " + seg);
    return it->second;
  }

  mutable std::mutex mutex_;
  std::map<std::string, std::vector<std::string>> segments_;
  std::map<std::string, Outcome> outcomes_;
  std::vector<std::string> prompts_;
};

/// Text markers that only appear in the step-by-step judging templates.
inline const std::vector<std::string>& step_markers() {
  static const std::vector<std::string> markers{"步骤", "Step ", "(a)", "（a）", "第一步"};
  return markers;
}

}  // namespace ragfce::testing
