#include <chrono>

#include <gtest/gtest.h>

#include "xlf/error.hpp"
#include "xlf/subprocess.hpp"

using namespace std::chrono_literals;
using xlf::Subprocess;

TEST(SplitCommandLine, QuotesAndEscapes) {
  using V = std::vector<std::string>;
  EXPECT_EQ(xlf::split_command_line("python3 -m scorer"), (V{"python3", "-m", "scorer"}));
  EXPECT_EQ(xlf::split_command_line("  a   'b c'  \"d e\" f\\ g "), (V{"a", "b c", "d e", "f g"}));
  EXPECT_EQ(xlf::split_command_line("x ''"), (V{"x", ""}));
  EXPECT_TRUE(xlf::split_command_line("   ").empty());
  EXPECT_THROW(xlf::split_command_line("a 'b"), xlf::ValidationError);
}

TEST(Subprocess, EchoesLinesThroughCat) {
  Subprocess p = Subprocess::spawn({"cat"});
  p.write_line("hello");
  p.write_line("world");
  EXPECT_EQ(p.read_line(2s), "hello");
  EXPECT_EQ(p.read_line(2s), "world");
  p.close_stdin();
  EXPECT_EQ(p.read_line(2s), std::nullopt);
  EXPECT_EQ(p.terminate(), 0);
}

TEST(Subprocess, ReadTimeout) {
  Subprocess p = Subprocess::spawn({"sleep", "5"});
  EXPECT_THROW(p.read_line(100ms), xlf::TransportError);
}

TEST(Subprocess, SpawnFailure) {
  EXPECT_THROW(Subprocess::spawn({"/nonexistent/xlf-binary"}), xlf::SpawnError);
  EXPECT_THROW(Subprocess::spawn({}), xlf::SpawnError);
}

TEST(Subprocess, WriteAfterExitFails) {
  Subprocess p = Subprocess::spawn({"true"});
  EXPECT_EQ(p.read_line(2s), std::nullopt);
  p.terminate();
  EXPECT_THROW(p.write_line("x"), xlf::TransportError);
}

TEST(Subprocess, MoveTransfersOwnership) {
  Subprocess a = Subprocess::spawn({"cat"});
  Subprocess b = std::move(a);
  EXPECT_FALSE(a.running());
  b.write_line("x");
  EXPECT_EQ(b.read_line(2s), "x");
}
