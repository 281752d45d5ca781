#pragma once

#include <Eigen/Dense>
#include <vector>

namespace pairgen::nn {

template <class S>
using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class S>
using RowVector = Eigen::Matrix<S, 1, Eigen::Dynamic>;

// Token ids plus the absolute position and segment id of every token.
struct Sequence {
  std::vector<int> ids;
  std::vector<int> positions;
  std::vector<int> segments;  // empty unless the model uses segment embeddings
  std::vector<int> slots;     // slot-embedding decoders: slot_window template tokens per row, row-major

  std::size_t size() const { return ids.size(); }

  // Positions 0..n-1, optional constant segment.
  static Sequence plain(std::vector<int> ids, int segment = -1);
};

}  // namespace pairgen::nn
