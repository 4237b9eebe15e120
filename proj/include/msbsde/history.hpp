#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "msbsde/error.hpp"

namespace msbsde {

/// Fixed-capacity ring of per-layer coefficient sets, newest first. During
/// the step at t_n, position j holds the set of layer n + j + 1. Pushing
/// rotates the ring instead of copying K sets.
template <class Set>
class SplineHistory {
public:
    explicit SplineHistory(std::size_t capacity) : ring_(capacity) {
        if (capacity == 0) raise(ErrorKind::InvalidArgument, "history capacity must be positive");
    }

    std::size_t capacity() const noexcept { return ring_.size(); }
    std::size_t size() const noexcept { return size_; }
    bool full() const noexcept { return size_ == ring_.size(); }

    /// Inserts at position 0; the oldest set drops out once the ring is full.
    void push(Set newest) {
        head_ = (head_ + ring_.size() - 1) % ring_.size();
        ring_[head_] = std::move(newest);
        if (size_ < ring_.size()) ++size_;
    }

    const Set& operator[](std::size_t j) const {
        if (j >= size_) raise(ErrorKind::InvalidArgument, "history position out of range");
        return ring_[(head_ + j) % ring_.size()];
    }

private:
    std::vector<Set> ring_;
    std::size_t head_ = 0;
    std::size_t size_ = 0;
};

template <class Set>
SplineHistory<Set> shift_history(SplineHistory<Set> history, Set newest) {
    history.push(std::move(newest));
    return history;
}

}  // namespace msbsde
