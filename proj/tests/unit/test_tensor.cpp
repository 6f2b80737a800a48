#include <doctest.h>

#include "semcomm/tensor.hpp"

using namespace semcomm;

TEST_CASE("tensor layout is batch, channel, row, column") {
  Tensor4<float> t(2, 3, 4, 5);
  CHECK(t.n() == 2);
  CHECK(t.c() == 3);
  CHECK(t.h() == 4);
  CHECK(t.w() == 5);
  CHECK(t.size() == 2u * 3u * 4u * 5u);
  CHECK(t.item_size() == 3u * 4u * 5u);

  t.at(1, 2, 3, 4) = 9.5f;
  CHECK(t.data()[((1 * 3 + 2) * 4 + 3) * 5 + 4] == 9.5f);
  CHECK(t.item(1)[(2 * 4 + 3) * 5 + 4] == 9.5f);

  const Tensor4<float>& ct = t;
  CHECK(ct.at(1, 2, 3, 4) == 9.5f);
}

TEST_CASE("tensor fill and shape comparison") {
  Tensor4<double> a(1, 2, 2, 2);
  a.fill(3.0);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.data()[i] == 3.0);

  Tensor4<double> b(1, 2, 2, 2);
  Tensor4<double> c(2, 2, 2, 1);
  CHECK(a.same_shape(b));
  CHECK_FALSE(a.same_shape(c));

  CHECK_THROWS_AS(Tensor4<float>(-1, 1, 1, 1), std::invalid_argument);
}

TEST_CASE("default tensor is empty") {
  Tensor4<float> t;
  CHECK(t.size() == 0u);
  CHECK(t.n() == 0);
}

TEST_CASE("image batch labels are optional") {
  ImageBatch b;
  b.data = Tensor4<float>(4, 3, 32, 32);
  CHECK(b.size() == 4);
  CHECK_FALSE(b.has_labels());
  b.labels = {1, 2, 3, 4};
  CHECK(b.has_labels());
}
