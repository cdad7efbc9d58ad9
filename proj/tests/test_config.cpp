#include <catch2/catch_amalgamated.hpp>

#include <tppd/config.hpp>

using namespace tppd;

static const char* sample =
    "# top comment\n"
    "slots = 200\n"
    "rate = 1.5e6   # inline comment\n"
    "name = \"hello # not a comment\"\n"
    "flag = true\n"
    "\n"
    "[tasks]\n"
    "cycles = [0.2e9, 1e9]\n"
    "files = [\"a.plt\", \"b.plt\"]\n";

TEST_CASE("config: scalars, sections, comments", "[config]") {
    config c = config::parse(sample);
    CHECK(c.get_int("slots") == 200);
    CHECK(c.get_double("rate") == 1.5e6);
    CHECK(c.get_string("name") == "hello # not a comment");
    CHECK(c.get_bool("flag") == true);
    auto cy = c.get_double_list("tasks.cycles");
    REQUIRE(cy.size() == 2);
    CHECK(cy[0] == 0.2e9);
    CHECK(cy[1] == 1e9);
    auto fs = c.get_string_list("tasks.files");
    REQUIRE(fs.size() == 2);
    CHECK(fs[0] == "a.plt");
    CHECK(fs[1] == "b.plt");
}

TEST_CASE("config: defaults and presence", "[config]") {
    config c = config::parse("x = 1\n");
    CHECK(c.has("x"));
    CHECK_FALSE(c.has("y"));
    CHECK(c.get_double("y", 2.5) == 2.5);
    CHECK(c.get_int("y", 7) == 7);
    CHECK(c.get_string("y", "d") == "d");
}

TEST_CASE("config: errors name the key or line", "[config]") {
    config c = config::parse("x = abc\nn = 1.5\n");
    CHECK_THROWS_WITH(c.get_double("x"), Catch::Matchers::ContainsSubstring("'x'"));
    CHECK_THROWS_WITH(c.get_int("n"), Catch::Matchers::ContainsSubstring("'n'"));
    CHECK_THROWS_WITH(c.get_double("missing"), Catch::Matchers::ContainsSubstring("missing"));
    CHECK_THROWS_WITH(config::parse("just a line\n"), Catch::Matchers::ContainsSubstring(":1:"));
    CHECK_THROWS_WITH(config::parse("[open\n"), Catch::Matchers::ContainsSubstring("section"));
}

TEST_CASE("config: later duplicate wins", "[config]") {
    config c = config::parse("a = 1\na = 2\n");
    CHECK(c.get_int("a") == 2);
}
