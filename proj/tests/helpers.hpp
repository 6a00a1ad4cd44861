#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "winnow/core.hpp"
#include "winnow/gateway.hpp"
#include "winnow/log.hpp"

namespace winnow::testing {

// Backend driven by a lambda; counts completions.
class CallbackBackend : public TextBackend {
 public:
  using Fn = std::function<std::string(const GenerationRequest&)>;
  explicit CallbackBackend(Fn fn, std::string name = "callback")
      : fn_(std::move(fn)), name_(std::move(name)) {}
  std::string id() const override { return name_; }
  std::string complete(const GenerationRequest& request) override {
    calls_.fetch_add(1);
    return fn_(request);
  }
  int calls() const { return calls_.load(); }

 private:
  Fn fn_;
  std::string name_;
  std::atomic<int> calls_{0};
};

inline std::string identity_permutation_text(std::size_t window_len) {
  std::ostringstream out;
  for (std::size_t i = 1; i <= window_len; ++i) {
    if (i > 1) out << " > ";
    out << '[' << i << ']';
  }
  return out.str();
}

// Backend that returns the identity permutation for rank tasks.
inline std::shared_ptr<CallbackBackend> identity_rank_backend() {
  return std::make_shared<CallbackBackend>(
      [](const GenerationRequest& request) {
        return identity_permutation_text(request.context ? request.context->passage_ids.size()
                                                         : 0);
      },
      "identity-rank");
}

// Self-deleting scratch directory.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& hint) {
    static std::atomic<unsigned> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path = std::filesystem::temp_directory_path() /
           ("winnow_" + hint + "_" + std::to_string(stamp) + "_" +
            std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

// Collects warnings for assertions; restores the default sink on destruction.
struct WarningCapture {
  std::vector<std::string> messages;
  std::mutex mutex;
  WarningCapture() {
    logging::set_sink([this](const std::string& message) {
      std::lock_guard<std::mutex> lock(mutex);
      messages.push_back(message);
    });
  }
  ~WarningCapture() { logging::set_sink({}); }
  bool any_contains(const std::string& needle) {
    std::lock_guard<std::mutex> lock(mutex);
    for (const auto& m : messages) {
      if (m.find(needle) != std::string::npos) return true;
    }
    return false;
  }
};

inline Corpus numbered_corpus(int count, const std::string& prefix = "p") {
  Corpus corpus;
  for (int i = 1; i <= count; ++i) {
    const std::string id = prefix + std::to_string(i);
    corpus.emplace(id, Passage{id, "passage body number " + std::to_string(i)});
  }
  return corpus;
}

inline RankedList descending_list(const std::string& query_id,
                                  const std::vector<std::string>& passage_ids) {
  std::vector<RankEntry> entries;
  double score = static_cast<double>(passage_ids.size());
  for (const auto& passage_id : passage_ids) {
    entries.push_back(RankEntry{passage_id, score, 0});
    score -= 1.0;
  }
  return RankedList(query_id, std::move(entries));
}

}  // namespace winnow::testing
