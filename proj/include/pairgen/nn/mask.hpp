#pragma once

#include <vector>

namespace pairgen::nn {

// allowed(i, j) is true iff position i may attend to position j.
class AttentionMask {
 public:
  AttentionMask() = default;
  AttentionMask(int length, bool fill);

  int size() const { return length_; }
  bool operator()(int i, int j) const { return allowed_[static_cast<std::size_t>(i * length_ + j)] != 0; }
  void set(int i, int j, bool v) { allowed_[static_cast<std::size_t>(i * length_ + j)] = v ? 1 : 0; }

  friend bool operator==(const AttentionMask&, const AttentionMask&) = default;

 private:
  int length_ = 0;
  std::vector<unsigned char> allowed_;
};

AttentionMask build_causal_mask(int length);

// Bidirectional over the first input_len positions, causal over the rest.
AttentionMask build_hybrid_mask(int input_len, int output_len);

AttentionMask build_full_mask(int length);

}  // namespace pairgen::nn
