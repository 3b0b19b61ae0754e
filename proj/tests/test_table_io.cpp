#include "gplmbar/table_io.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace gplmbar;

namespace {

Table parse(const std::string& text, char delimiter = '\t') {
    std::istringstream in(text);
    return parse_table(in, "mem", delimiter);
}

std::string error_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const DataError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST(Table, ParsesWithCommentsAndBlanks) {
    const Table t = parse("# a comment\n\nid\ty\tx\n a \t1\t2.5\r\nb\t0\tNA\n");
    EXPECT_EQ(t.header, (std::vector<std::string>{"id", "y", "x"}));
    ASSERT_EQ(t.size(), 2u);
    EXPECT_EQ(t.rows[0][0], "a");
    EXPECT_EQ(t.lines, (std::vector<std::size_t>{4, 5}));
    EXPECT_EQ(t.number(0, 2), 2.5);
    EXPECT_TRUE(std::isnan(t.number(1, 2)));
    EXPECT_EQ(t.find("x"), 2u);
    EXPECT_FALSE(t.find("z").has_value());
}

TEST(Table, ErrorsNameTheLocation) {
    EXPECT_NE(error_of([] { parse("a\tb\n1\n"); }).find("mem:2"), std::string::npos);
    EXPECT_NE(error_of([] { parse("a\ta\n"); }).find("duplicate column 'a'"), std::string::npos);
    EXPECT_NE(error_of([] { parse("# only\n"); }).find("no header"), std::string::npos);
    const Table t = parse("a,b\n1,x1\n", ',');
    const std::string msg = error_of([&] { t.number(0, 1); });
    EXPECT_NE(msg.find("mem:2: column 'b'"), std::string::npos) << msg;
    EXPECT_NE(msg.find("x1"), std::string::npos);
}

TEST(Table, DelimiterFromExtension) {
    EXPECT_EQ(delimiter_for("a/b.csv"), ',');
    EXPECT_EQ(delimiter_for("a/b.CSV"), ',');
    EXPECT_EQ(delimiter_for("a/b.tsv"), '\t');
    EXPECT_EQ(delimiter_for("a/b.txt"), '\t');
}

TEST(Join, FollowsLeftOrder) {
    const Table l = parse("id\ty\nc\t1\na\t0\nb\t1\n");
    const Table r = parse("sample\tg1\na\t2\nb\t0\nc\t1\n");
    const Table j = join_by_id(l, "id", r, "sample");
    EXPECT_EQ(j.header, (std::vector<std::string>{"id", "y", "g1"}));
    ASSERT_EQ(j.size(), 3u);
    EXPECT_EQ(j.rows[0], (std::vector<std::string>{"c", "1", "1"}));
    EXPECT_EQ(j.rows[1], (std::vector<std::string>{"a", "0", "2"}));
}

TEST(Join, UnmatchedIdsAreListed) {
    const Table l = parse("id\ty\na\t1\nb\t0\nq\t1\n");
    const Table r = parse("id\tg\na\t2\nb\t0\nz9\t1\n");
    const std::string msg = error_of([&] { join_by_id(l, "id", r, "id"); });
    EXPECT_NE(msg.find("q"), std::string::npos) << msg;
    EXPECT_NE(msg.find("z9"), std::string::npos) << msg;
    const Table dup = parse("id\tg\na\t2\na\t0\n");
    EXPECT_NE(error_of([&] { join_by_id(l, "id", dup, "id"); }).find("duplicate id 'a'"), std::string::npos);
    EXPECT_THROW(join_by_id(l, "nope", r, "id"), DataError);
}

TEST(Format, RoundTripsAtSeventeenDigits) {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
        EXPECT_EQ(std::stod(format_number(v)), v);
    }
    EXPECT_EQ(format_number(std::nan("")), "nan");
    EXPECT_EQ(format_number(-INFINITY), "-inf");
    EXPECT_EQ(format_number(0.123456789, 4), "0.1235");
}

TEST(Write, CommentThenHeader) {
    const auto path = std::filesystem::temp_directory_path() / "gplmbar_table_io_write.tsv";
    write_table(path, "hello", {"a", "b"}, {{"1", "2"}, {"3", "4"}});
    std::ifstream in(path);
    std::string first, second;
    std::getline(in, first);
    std::getline(in, second);
    EXPECT_EQ(first, "# hello");
    EXPECT_EQ(second, "a\tb");
    const Table t = read_table(path);
    EXPECT_EQ(t.size(), 2u);
    EXPECT_EQ(t.number(1, 1), 4.0);
    std::filesystem::remove(path);
}

TEST(Render, AlignsColumns) {
    const std::string s = render_aligned({"x", "long"}, {{"12345", "1"}});
    std::istringstream in(s);
    std::string a, b;
    std::getline(in, a);
    std::getline(in, b);
    EXPECT_EQ(a.find("long"), b.rfind('1'));
}
