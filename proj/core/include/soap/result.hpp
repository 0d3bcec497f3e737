#pragma once

#include <stdexcept>
#include <utility>
#include <variant>

namespace soap {

template <class E>
struct Failure {
  E error;
};

template <class E>
Failure<E> fail(E error) {
  return Failure<E>{std::move(error)};
}

// Value-or-error return used by codecs and validators. Accessing the wrong
// alternative throws std::logic_error.
template <class T, class E>
class Result {
 public:
  Result(T value) : storage_(std::in_place_index<0>, std::move(value)) {}
  Result(Failure<E> failure) : storage_(std::in_place_index<1>, std::move(failure.error)) {}

  [[nodiscard]] bool has_value() const noexcept { return storage_.index() == 0; }
  explicit operator bool() const noexcept { return has_value(); }

  T& value() & {
    check_value();
    return std::get<0>(storage_);
  }
  const T& value() const& {
    check_value();
    return std::get<0>(storage_);
  }
  T&& value() && {
    check_value();
    return std::get<0>(std::move(storage_));
  }
  const E& error() const {
    if (has_value()) throw std::logic_error("Result holds a value, not an error");
    return std::get<1>(storage_);
  }

  T& operator*() & { return value(); }
  const T& operator*() const& { return value(); }
  T* operator->() { return &value(); }
  const T* operator->() const { return &value(); }

 private:
  void check_value() const {
    if (!has_value()) throw std::logic_error("Result holds an error, not a value");
  }

  std::variant<T, E> storage_;
};

// Result<void, E> specialization for operations with no payload.
struct Ok {};

}  // namespace soap
