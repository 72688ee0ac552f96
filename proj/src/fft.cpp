#include "pslab/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

namespace pslab::fft {
namespace {

enum class Kind { one_d, columns, two_d };

using Key = std::tuple<int, long, long, int>;

std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

std::map<Key, fftw_plan>& plan_cache() {
  static std::map<Key, fftw_plan> c;
  return c;
}

// Plans are created once under a lock and executed with the new-array API,
// which is safe to call concurrently.
fftw_plan get_plan(Kind kind, long rows, long cols, int sign) {
  Key key{static_cast<int>(kind), rows, cols, sign};
  std::lock_guard<std::mutex> lock(plan_mutex());
  auto& cache = plan_cache();
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  CMatrix scratch(rows, cols);
  auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
  unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  fftw_plan plan = nullptr;
  switch (kind) {
    case Kind::one_d:
      plan = fftw_plan_dft_1d(static_cast<int>(rows), p, p, sign, flags);
      break;
    case Kind::columns: {
      int n = static_cast<int>(rows);
      plan = fftw_plan_many_dft(1, &n, static_cast<int>(cols), p, nullptr, 1, n, p, nullptr, 1,
                                n, sign, flags);
      break;
    }
    case Kind::two_d:
      // column-major rows x cols is row-major cols x rows
      plan = fftw_plan_dft_2d(static_cast<int>(cols), static_cast<int>(rows), p, p, sign, flags);
      break;
  }
  if (!plan) fail(ErrorCode::internal, "fftw plan creation failed");
  cache.emplace(key, plan);
  return plan;
}

void run(Kind kind, cplx* data, long rows, long cols, int sign) {
  if (rows == 0 || cols == 0) return;
  fftw_plan plan = get_plan(kind, rows, cols, sign);
  auto* p = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(plan, p, p);
}

}  // namespace

void forward(cplx* data, int n) { run(Kind::one_d, data, n, 1, FFTW_FORWARD); }
void backward(cplx* data, int n) { run(Kind::one_d, data, n, 1, FFTW_BACKWARD); }
void forward_columns(CMatrix& m) { run(Kind::columns, m.data(), m.rows(), m.cols(), FFTW_FORWARD); }
void backward_columns(CMatrix& m) {
  run(Kind::columns, m.data(), m.rows(), m.cols(), FFTW_BACKWARD);
}
void forward_2d(CMatrix& m) { run(Kind::two_d, m.data(), m.rows(), m.cols(), FFTW_FORWARD); }
void backward_2d(CMatrix& m) { run(Kind::two_d, m.data(), m.rows(), m.cols(), FFTW_BACKWARD); }

}  // namespace pslab::fft
