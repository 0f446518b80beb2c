#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>

#include "generators.hpp"
#include "lsvpm/csv.hpp"
#include "lsvpm/errors.hpp"

using namespace lsvpm;

TEST(Csv, FormatParseIsBitExact) {
    check::Gen gen(1);
    for (int k = 0; k < 10000; ++k) {
        const double v = (gen.uniform(0, 1) < 0.5 ? -1 : 1) * gen.scale(1e-300, 1e300);
        EXPECT_EQ(std::bit_cast<std::uint64_t>(csv::parse_double(csv::format(v))), std::bit_cast<std::uint64_t>(v));
    }
    for (double v : {0.0, 0.1, 1.0 / 3, 1e-320, std::numeric_limits<double>::max()}) {
        EXPECT_EQ(csv::parse_double(csv::format(v)), v);
    }
    EXPECT_TRUE(std::isnan(csv::parse_double(csv::format(std::nan("")))));
}

TEST(Csv, ParseRejectsGarbage) {
    EXPECT_THROW(csv::parse_double("1.5x"), Error);
    EXPECT_THROW(csv::parse_double(""), Error);
    EXPECT_DOUBLE_EQ(csv::parse_double(" 2.5\r"), 2.5);
}

TEST(Csv, SplitKeepsEmptyFields) {
    const auto f = csv::split("a,,b,");
    ASSERT_EQ(f.size(), 4u);
    EXPECT_EQ(f[1], "");
    EXPECT_EQ(f[3], "");
}

TEST(Csv, ReadRowsChecksTheHeader) {
    const auto path = std::filesystem::temp_directory_path() / "lsvpm_csv" / "rows.csv";
    {
        auto out = csv::open_for_write(path, "comment");
        out << "a,b\n1,2\n# later comment\n3,4\n";
    }
    const auto rows = csv::read_rows(path, "a,b");
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[1][1], "4");
    EXPECT_THROW(csv::read_rows(path, "a,c"), Error);
    std::filesystem::remove_all(path.parent_path());
}
