#pragma once

#include <functional>

namespace reckit {

/// Rating predictor over the training dataset's dense id space.
/// Implementations throw ColdStart for pairs they cannot score.
using PredictFn = std::function<double(int user, int item)>;

}  // namespace reckit
