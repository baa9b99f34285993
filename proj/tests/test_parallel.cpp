#include <gtest/gtest.h>

#include <atomic>
#include <stdexcept>

#include "matchx/gnn.hpp"
#include "matchx/parallel.hpp"
#include "support.hpp"

namespace matchx {
namespace {

TEST(ParallelFor, VisitsEveryIndexOnce) {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(hits.size(), Exec::parallel, [&](std::size_t i) { ++hits[i]; });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(ParallelFor, RethrowsSmallestFailingIndex) {
  for (Exec exec : {Exec::serial, Exec::parallel}) {
    try {
      parallel_for(100, exec, [](std::size_t i) {
        if (i % 7 == 3) throw std::runtime_error(std::to_string(i));
      });
      FAIL();
    } catch (const std::runtime_error& e) {
      EXPECT_STREQ(e.what(), "3");
    }
  }
}

TEST(BatchGradient, SerialAndParallelAgree) {
  const auto& t = testing::toy();
  std::vector<const Graph*> batch;
  for (std::size_t i = 0; i < 40; ++i) batch.push_back(&t.train[i]);
  const Model m = default_model(t.train[0].feature_width(), 2, 5);
  Vector a = Vector::Zero(static_cast<Eigen::Index>(m.num_params()));
  Vector b = a;
  const double la = batch_gradient(m, batch, a, Exec::serial);
  const double lb = batch_gradient(m, batch, b, Exec::parallel);
  EXPECT_EQ(la, lb);
  EXPECT_EQ(a, b);
}

}  // namespace
}  // namespace matchx
