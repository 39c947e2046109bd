#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "bop/diff/tensor.hpp"

namespace bop::diff {

// Versioned flat tensor blob: magic "BOPW", u32 version, u32 tensor count,
// then per tensor: u32 rank, u64 dims..., little-endian f64 payload.
inline constexpr std::uint32_t kWeightsFormatVersion = 1;

void write_tensors(std::ostream& os, const std::vector<Tensor>& tensors);
std::vector<Tensor> read_tensors(std::istream& is);

// Restores values into an existing tensor list; shapes must match exactly.
void load_tensor_values(std::istream& is, std::vector<Tensor>& into);

std::uint64_t fnv1a64(const void* data, std::size_t len);

}  // namespace bop::diff
