#pragma once

#include <memory>
#include <utility>

namespace babelbot {

/// Heap-allocated value with deep-copy semantics; lets variants recurse.
template <class T>
class Box {
public:
  Box(T value) : ptr_(std::make_unique<T>(std::move(value))) {} // NOLINT(google-explicit-constructor)
  Box(const Box &other) : ptr_(std::make_unique<T>(*other.ptr_)) {}
  Box(Box &&) noexcept = default;
  Box &operator=(const Box &other) {
    if (this != &other) {
      ptr_ = std::make_unique<T>(*other.ptr_);
    }
    return *this;
  }
  Box &operator=(Box &&) noexcept = default;
  ~Box() = default;

  T &operator*() { return *ptr_; }
  const T &operator*() const { return *ptr_; }
  T *operator->() { return ptr_.get(); }
  const T *operator->() const { return ptr_.get(); }

  friend bool operator==(const Box &a, const Box &b) { return *a == *b; }

private:
  std::unique_ptr<T> ptr_;
};

} // namespace babelbot
