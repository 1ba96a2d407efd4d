#include <catch2/catch_amalgamated.hpp>

#include "gasduino/aqi.hpp"

#include <cmath>
#include <limits>

using namespace gasduino;

TEST_CASE("classify maps the documented table values") {
  CHECK(classify(45.0).category == AqiCategory::good);
  CHECK(classify(100.0).category == AqiCategory::moderate);
  CHECK(classify(175.0).category == AqiCategory::unhealthy);
  CHECK(classify(0.0).category == AqiCategory::good);
}

TEST_CASE("classify boundaries are half-open intervals") {
  CHECK(classify(50.0).category == AqiCategory::good);
  CHECK(classify(50.5).category == AqiCategory::moderate);
  CHECK(classify(150.0).category == AqiCategory::moderate);
  CHECK(classify(151.0).category == AqiCategory::unhealthy);
  CHECK(classify(200.0).category == AqiCategory::unhealthy);
  CHECK_FALSE(classify(200.0).out_of_scale);
  CHECK(classify(200.01).out_of_scale);
}

TEST_CASE("values above 200 are unhealthy and out of scale") {
  const AqiStatus over = classify(250.0);
  CHECK(over.category == AqiCategory::unhealthy);
  CHECK(over.out_of_scale);
  CHECK(classify(201.0).out_of_scale);
}

TEST_CASE("classify rejects invalid input") {
  CHECK_THROWS_AS(classify(-1.0), std::domain_error);
  CHECK_THROWS_AS(classify(std::numeric_limits<double>::quiet_NaN()), std::domain_error);
  CHECK_THROWS_AS(classify(std::numeric_limits<double>::infinity()), std::domain_error);
}

TEST_CASE("classification is total and monotone over a dense sweep") {
  int previous = 0;
  for (double ppm = 0.0; ppm <= 400.0; ppm += 0.25) {
    const AqiStatus status = classify(ppm);
    const int index = static_cast<int>(status.category);
    REQUIRE(index >= 0);
    REQUIRE(index <= 2);
    REQUIRE(index >= previous);
    REQUIRE(status.out_of_scale == (ppm > 200.0));
    if (status.out_of_scale) REQUIRE(status.category == AqiCategory::unhealthy);
    previous = index;
  }
}

TEST_CASE("indicator mapping is the fixed bijection") {
  CHECK(indicator_for({AqiCategory::good, false}) == IndicatorColor::green);
  CHECK(indicator_for({AqiCategory::moderate, false}) == IndicatorColor::blue);
  CHECK(indicator_for({AqiCategory::unhealthy, false}) == IndicatorColor::red);
  CHECK(indicator_for({AqiCategory::unhealthy, true}) == IndicatorColor::red);
}

TEST_CASE("text forms") {
  CHECK(to_string(AqiCategory::good) == "good");
  CHECK(to_string(AqiCategory::moderate) == "moderate");
  CHECK(to_string(AqiCategory::unhealthy) == "unhealthy");
  CHECK(to_string(IndicatorColor::green) == "green");
  CHECK(to_string(IndicatorColor::blue) == "blue");
  CHECK(to_string(IndicatorColor::red) == "red");
  CHECK(category_from_string("moderate") == AqiCategory::moderate);
  CHECK_THROWS_AS(category_from_string("fine"), std::invalid_argument);
}

TEST_CASE("descriptions carry the category text") {
  CHECK(describe({AqiCategory::good, false}).find("no risk") != std::string::npos);
  CHECK(describe({AqiCategory::moderate, false}).find("sensitive people") != std::string::npos);
  CHECK(describe({AqiCategory::unhealthy, false}).find("Very harmful") != std::string::npos);

  const std::string base = describe({AqiCategory::unhealthy, false});
  const std::string flagged = describe({AqiCategory::unhealthy, true});
  CHECK(flagged.find(base) == 0);
  CHECK(flagged.size() > base.size());
  CHECK(flagged.find("above the measurable scale") != std::string::npos);
}

TEST_CASE("status byte round trip") {
  CHECK(status_code({AqiCategory::good, false}) == 0x00);
  CHECK(status_code({AqiCategory::moderate, false}) == 0x01);
  CHECK(status_code({AqiCategory::unhealthy, false}) == 0x02);
  CHECK(status_code({AqiCategory::unhealthy, true}) == 0x82);

  for (double ppm : {0.0, 45.0, 50.0, 50.5, 150.0, 151.0, 200.0, 201.0, 300.0}) {
    const AqiStatus status = classify(ppm);
    CHECK(status_from_code(status_code(status)) == status);
  }
  CHECK_THROWS_AS(status_from_code(0x03), std::invalid_argument);
  CHECK_THROWS_AS(status_from_code(0x80), std::invalid_argument);  // out-of-scale good
  CHECK_THROWS_AS(status_from_code(0x81), std::invalid_argument);
}
