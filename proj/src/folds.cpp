#include "xcohort/folds.hpp"

#include <map>

#include "xcohort/error.hpp"
#include "xcohort/rng.hpp"

namespace xcohort {

std::vector<int> stratified_folds(std::span<const int> labels, int k, std::uint64_t seed) {
    if (k < 2) fail(ErrorCode::InvalidValue, "fold count must be >= 2");
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
    std::vector<int> fold(labels.size(), 0);
    std::size_t offset = 0;
    for (auto& [cls, idx] : by_class) {
        Rng rng = Rng::stream(seed, {0x466f6c64ULL, static_cast<std::uint64_t>(cls)});
        rng.shuffle(idx.begin(), idx.end());
        for (std::size_t r = 0; r < idx.size(); ++r) fold[idx[r]] = static_cast<int>((offset + r) % static_cast<std::size_t>(k));
        offset = (offset + idx.size()) % static_cast<std::size_t>(k);
    }
    return fold;
}

FoldSplit fold_split(std::span<const int> fold_of, int f) {
    FoldSplit s;
    for (std::size_t i = 0; i < fold_of.size(); ++i) (fold_of[i] == f ? s.validation : s.train).push_back(i);
    return s;
}

}  // namespace xcohort
