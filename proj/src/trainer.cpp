#include "qdpref/trainer.hpp"

#include <chrono>

namespace qdpref {

Trainer::Trainer(PreferenceModel initial, TrainingConfig config)
    : config_(std::move(config)), current_(std::move(initial)), worker_([this] { run(); }) {}

Trainer::~Trainer() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  wake_.notify_all();
  worker_.join();
}

std::shared_future<TrainingOutcome> Trainer::submit(PreferenceDataset dataset, std::uint64_t seed) {
  std::shared_future<TrainingOutcome> future;
  {
    std::lock_guard lock(mutex_);
    jobs_.push_back({std::move(dataset), seed, {}});
    future = jobs_.back().done.get_future().share();
  }
  wake_.notify_one();
  return future;
}

std::size_t Trainer::queued() const {
  std::lock_guard lock(mutex_);
  return jobs_.size();
}

void Trainer::run() {
  for (;;) {
    Job job;
    {
      std::unique_lock lock(mutex_);
      wake_.wait(lock, [&] { return stopping_ || !jobs_.empty(); });
      // Pending jobs are finished before shutdown so no future is left dangling.
      if (jobs_.empty()) return;
      job = std::move(jobs_.front());
      jobs_.pop_front();
    }
    try {
      const auto start = std::chrono::steady_clock::now();
      std::mt19937_64 rng(job.seed);
      PreferenceModel next = current_;
      auto result = train_episode(next, job.dataset, config_, rng);
      current_ = next;
      const auto elapsed = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      job.done.set_value({std::make_shared<const PreferenceModel>(std::move(next)), std::move(result), elapsed});
    } catch (...) {
      job.done.set_exception(std::current_exception());
    }
  }
}

}  // namespace qdpref
