#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <future>
#include <memory>
#include <mutex>
#include <thread>

#include "qdpref/preference.hpp"

namespace qdpref {

struct TrainingOutcome {
  std::shared_ptr<const PreferenceModel> model;
  EpisodeResult result;
  double wall_ms = 0.0;
};

// Background worker running training episodes one at a time, in submission order.
// Each episode starts from the weights the previous one produced.
class Trainer {
 public:
  Trainer(PreferenceModel initial, TrainingConfig config);
  ~Trainer();
  Trainer(const Trainer&) = delete;
  Trainer& operator=(const Trainer&) = delete;

  std::shared_future<TrainingOutcome> submit(PreferenceDataset dataset, std::uint64_t seed);
  std::size_t queued() const;

 private:
  struct Job {
    PreferenceDataset dataset;
    std::uint64_t seed;
    std::promise<TrainingOutcome> done;
  };

  void run();

  TrainingConfig config_;
  PreferenceModel current_;
  mutable std::mutex mutex_;
  std::condition_variable wake_;
  std::deque<Job> jobs_;
  bool stopping_ = false;
  std::thread worker_;
};

}  // namespace qdpref
