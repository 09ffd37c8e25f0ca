#include <gtest/gtest.h>

#include "oracles.hpp"
#include "timetrail/error.hpp"
#include "timetrail/text.hpp"

using namespace timetrail;

TEST(SplitLines, DropsCarriageReturnsAndTrailingEmptyLine) {
    auto lines = split_lines("a,b\r\nc,d\n");
    ASSERT_EQ(lines.size(), 2u);
    EXPECT_EQ(lines[0], "a,b");
    EXPECT_EQ(lines[1], "c,d");
}

TEST(SplitLines, KeepsInteriorEmptyLines) {
    auto lines = split_lines("a\n\nb");
    ASSERT_EQ(lines.size(), 3u);
    EXPECT_EQ(lines[1], "");
}

TEST(SplitFields, KeepsEmptyFields) {
    auto f = split_fields("a,,c,");
    ASSERT_EQ(f.size(), 4u);
    EXPECT_EQ(f[1], "");
    EXPECT_EQ(f[3], "");
}

TEST(Sha256, KnownDigests) {
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(FileIo, RoundTripAndMissingFileIsIoError) {
    auto dir = oracle::fresh_dir("text_io");
    write_file(dir / "x.txt", "hello\n");
    EXPECT_EQ(read_file(dir / "x.txt"), "hello\n");
    try {
        read_file(dir / "absent.txt");
        FAIL() << "expected IoError";
    } catch (const IoError& e) {
        EXPECT_NE(std::string(e.what()).find("absent.txt"), std::string::npos);
    }
}
