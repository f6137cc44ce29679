#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace xcohort {

/// Stratified k-fold assignment. Each class is shuffled with its own stream
/// derived from `seed`, then dealt round-robin with the fold offset carried
/// across classes, so per-fold class counts differ by at most one.
/// Returns the fold id (0..k-1) of every sample.
std::vector<int> stratified_folds(std::span<const int> labels, int k, std::uint64_t seed);

/// Index lists for fold `f`: (train, validation).
struct FoldSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
};
FoldSplit fold_split(std::span<const int> fold_of, int f);

}  // namespace xcohort
