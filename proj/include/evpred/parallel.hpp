// Exceptions must not leave an OpenMP region. Loop bodies capture the first
// one here and the caller rethrows after the region closes.
#pragma once

#include <exception>

namespace evpred {

class ExceptionSlot {
 public:
  template <class F>
  void run(F&& body) noexcept {
    try {
      body();
    } catch (...) {
#pragma omp critical(evpred_exception_slot)
      if (!ptr_) ptr_ = std::current_exception();
    }
  }
  void rethrow() const {
    if (ptr_) std::rethrow_exception(ptr_);
  }

 private:
  std::exception_ptr ptr_;
};

}  // namespace evpred
