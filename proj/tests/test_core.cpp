#include <doctest.h>

#include <filesystem>

#include "core/image.hpp"
#include "core/serial.hpp"
#include "core/tensor.hpp"
#include "testutil.hpp"

using namespace mealgen;
namespace fs = std::filesystem;

TEST_CASE("cosine similarity basics") {
  Rng rng(1);
  Tensor a = Tensor::randn({16}, rng), b = Tensor::randn({16}, rng);
  const double s = cosine(a, b);
  CHECK(s >= -1.0);
  CHECK(s <= 1.0);

  // scale invariance: s(k*a, b) == s(a, b) for k > 0
  Tensor ka = a;
  ka.scale_(3.7);
  CHECK(cosine(ka, b) == doctest::Approx(s).epsilon(1e-12));

  Tensor zero({16});
  CHECK_THROWS_AS(cosine(zero, b), Error);
}

TEST_CASE("cosine gradient matches finite differences") {
  Rng rng(2);
  Tensor a = Tensor::randn({8}, rng), b = Tensor::randn({8}, rng);
  Tensor ga({8}), gb({8});
  cosine_backward(a, b, 1.0, ga, gb);
  auto f = [&]() { return cosine(a, b); };
  CHECK(test::gradcheck(a, ga, f) < 1e-7);
  auto f2 = [&]() { return cosine(a, b); };
  CHECK(test::gradcheck(b, gb, f2) < 1e-7);
}

TEST_CASE("tensor file round trip") {
  const std::string path = (fs::temp_directory_path() / "mg_test_tensors.bin").string();
  TensorFile tf;
  tf.meta["note"] = "round trip";
  Rng rng(3);
  tf.tensors["a"] = Tensor::randn({3, 4}, rng);
  tf.tensors["b"] = Tensor::randn({7}, rng);
  tf.save(path);
  TensorFile back = TensorFile::load(path);
  CHECK(back.meta["note"] == "round trip");
  CHECK(back.get("a").shape() == tf.get("a").shape());
  for (long i = 0; i < tf.get("a").size(); ++i) CHECK(back.get("a")[i] == tf.get("a")[i]);
  CHECK_THROWS_AS(back.get("missing"), Error);
  fs::remove(path);
}

TEST_CASE("ppm io round trip is byte exact") {
  ImageU8 img;
  img.h = 5;
  img.w = 7;
  img.px.resize(5 * 7 * 3);
  for (size_t i = 0; i < img.px.size(); ++i) img.px[i] = static_cast<uint8_t>((i * 37) % 256);
  const std::string path = (fs::temp_directory_path() / "mg_test.ppm").string();
  write_ppm(path, img);
  ImageU8 back = read_ppm(path);
  CHECK(back.h == img.h);
  CHECK(back.w == img.w);
  CHECK(back.px == img.px);
  fs::remove(path);
}

TEST_CASE("image tensor conversion round trips uint8 exactly") {
  ImageU8 img;
  img.h = img.w = 4;
  img.px.resize(4 * 4 * 3);
  for (size_t i = 0; i < img.px.size(); ++i) img.px[i] = static_cast<uint8_t>((i * 13) % 256);
  ImageU8 back = tensor_to_image(image_to_tensor(img));
  CHECK(back.px == img.px);
}
