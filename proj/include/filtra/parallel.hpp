#ifndef FILTRA_PARALLEL_HPP
#define FILTRA_PARALLEL_HPP

#include <exception>
#include <mutex>

namespace filtra {

/// Worker count for OpenMP regions: FILTRA_THREADS if set and positive, else the OpenMP default.
int thread_budget();

// Collects the first exception thrown inside a parallel region so it can be
// rethrown on the calling thread after the region ends.
class FirstError {
 public:
  template <class F>
  void run(F&& f) noexcept {
    try {
      f();
    } catch (...) {
      std::lock_guard lock(mu_);
      if (!err_) err_ = std::current_exception();
    }
  }
  bool failed() const { return static_cast<bool>(err_); }
  void rethrow() const {
    if (err_) std::rethrow_exception(err_);
  }

 private:
  std::mutex mu_;
  std::exception_ptr err_;
};

}  // namespace filtra

#endif  // FILTRA_PARALLEL_HPP
