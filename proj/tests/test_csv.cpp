#include <catch2/catch_amalgamated.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

#include "pimfit/csv.hpp"

using namespace pimfit;

namespace {

class TempCsv {
public:
  explicit TempCsv(const std::string& contents) {
    static int counter = 0;
    path_ = (std::filesystem::temp_directory_path() /
             ("pimfit_test_" + std::to_string(::getpid()) + "_" +
              std::to_string(counter++) + ".csv"))
                .string();
    std::ofstream out(path_, std::ios::binary);
    out << contents;
  }
  ~TempCsv() { std::remove(path_.c_str()); }
  const std::string& path() const { return path_; }

private:
  std::string path_;
};

}  // namespace

TEST_CASE("a blank cell drops the row and reports the count") {
  const TempCsv file(
      "Y,A,B\n"
      "1,2,3\n"
      "4,,6\n"
      "7,8,9\n"
      "10,11,12\n"
      "13,14,15\n");
  CsvLoadInfo info;
  const Dataset data = load_csv(file.path(), "Y", {"A", "B"}, &info);
  REQUIRE(data.n() == 4);
  REQUIRE(info.rows_read == 5);
  REQUIRE(info.rows_dropped == 1);
  REQUIRE(data.y[0] == 1.0);
  REQUIRE(data.x(3, 1) == 15.0);
}

TEST_CASE("NA-style tokens count as missing, garbage is a named parse error") {
  const TempCsv missing(
      "Y,A\n"
      "1,2\n"
      "NA,3\n"
      "4,NaN\n"
      "5,6\n");
  CsvLoadInfo info;
  const Dataset data = load_csv(missing.path(), "Y", {"A"}, &info);
  REQUIRE(data.n() == 2);
  REQUIRE(info.rows_dropped == 2);

  const TempCsv garbage(
      "Y,A\n"
      "1,2\n"
      "3,4\n"
      "5,banana\n");
  try {
    load_csv(garbage.path(), "Y", {"A"});
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string what = e.what();
    REQUIRE(what.find("row 4") != std::string::npos);
    REQUIRE(what.find("'A'") != std::string::npos);
    REQUIRE(what.find("banana") != std::string::npos);
  }
}

TEST_CASE("missing columns and empty files are data errors") {
  const TempCsv file("Y,A\n1,2\n");
  REQUIRE_THROWS_AS(load_csv(file.path(), "Y", {"NOPE"}), DataError);
  REQUIRE_THROWS_AS(load_csv(file.path(), "NOPE", {"A"}), DataError);
  REQUIRE_THROWS_AS(load_csv("/nonexistent/nope.csv", "Y", {"A"}), DataError);

  const TempCsv all_missing("Y,A\nNA,1\nNA,2\n");
  REQUIRE_THROWS_AS(load_csv(all_missing.path(), "Y", {"A"}), DataError);
}

TEST_CASE("quoted fields carry commas, escaped quotes and newlines") {
  const TempCsv file(
      "Y,\"name, quoted\",A\r\n"
      "1,\"with \"\"quotes\"\" and, commas\",2\r\n"
      "3,\"multi\nline\",4\r\n");
  CsvLoadInfo info;
  const Dataset data = load_csv(file.path(), "Y", {"A"}, &info);
  REQUIRE(data.n() == 2);
  REQUIRE(data.y[1] == 3.0);
  REQUIRE(data.x(1, 0) == 4.0);
}

TEST_CASE("numeric parsing accepts signs, decimals and exponents") {
  const TempCsv file(
      "Y,A\n"
      "-1.5,2e3\n"
      "+0.25,-4.5E-2\n"
      " 3 , 7 \n");
  const Dataset data = load_csv(file.path(), "Y", {"A"});
  REQUIRE(data.n() == 3);
  REQUIRE(data.y[0] == -1.5);
  REQUIRE(data.x(0, 0) == 2000.0);
  REQUIRE(data.x(1, 0) == -0.045);
  REQUIRE(data.y[2] == 3.0);
}
