#pragma once

#include <functional>
#include <vector>

namespace ltaf {

struct EpochLog {
  int epoch = 0;
  double mean_loss = 0.0;
};

// Per-epoch loss record; `on_epoch` (if set) is invoked as each epoch ends.
struct TrainingLog {
  std::vector<EpochLog> epochs;
  std::function<void(const EpochLog&)> on_epoch;

  void record(int epoch, double loss) {
    epochs.push_back({epoch, loss});
    if (on_epoch) on_epoch(epochs.back());
  }
};

}  // namespace ltaf
