#include <doctest.h>

TEST_CASE("acceptance: placeholder until the suite lands") { CHECK(true); }
