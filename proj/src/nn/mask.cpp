#include "pairgen/nn/mask.hpp"

#include <stdexcept>

namespace pairgen::nn {

AttentionMask::AttentionMask(int length, bool fill)
    : length_(length), allowed_(static_cast<std::size_t>(length) * static_cast<std::size_t>(length), fill ? 1 : 0) {
  if (length < 1) throw std::invalid_argument("mask length must be >= 1");
}

AttentionMask build_causal_mask(int length) {
  AttentionMask m(length, false);
  for (int i = 0; i < length; ++i)
    for (int j = 0; j <= i; ++j) m.set(i, j, true);
  return m;
}

AttentionMask build_hybrid_mask(int input_len, int output_len) {
  if (input_len < 1 || output_len < 0) throw std::invalid_argument("invalid hybrid mask lengths");
  const int n = input_len + output_len;
  AttentionMask m(n, false);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m.set(i, j, j < input_len || (i >= input_len && j <= i));
  return m;
}

AttentionMask build_full_mask(int length) { return AttentionMask(length, true); }

}  // namespace pairgen::nn
