#include <doctest.h>

#include <fstream>
#include <sstream>

#include "laasim/catalog.hpp"
#include "laasim/report.hpp"

using namespace laasim;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void check_golden(const std::string& id) {
  const std::string expected = slurp(std::string(LAASIM_TEST_DIR) + "/golden/" + id + ".csv");
  REQUIRE_FALSE(expected.empty());
  std::ostringstream os;
  write_trace_csv(run(catalog_scenario(id)), os);
  CHECK(os.str() == expected);
}

}  // namespace

TEST_SUITE("golden") {
  TEST_CASE("static attack, primary control only") { check_golden("I.1"); }
  TEST_CASE("static attack with load shedding") { check_golden("II.3"); }
}
