#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "she/io.hpp"

using namespace she;

TEST_CASE("double formatting round-trips exactly") {
    for (double v : {0.1, 1.0 / 3.0, 2.5e-300, 13.37, -0.0, 6.02e23, 3.2552083333333335e-4}) {
        const std::string s = fmt_double(v);
        CHECK(parse_double(s, "test") == v);
    }
}

TEST_CASE("key=value parsing") {
    const auto doc = KeyValueDoc::parse_string(
        "# comment line\n"
        "family = powerlaw\n"
        "gamma=0.5\n"
        "\n"
        "n_paths = 16   # trailing comment\n");
    CHECK(doc.get("family") == "powerlaw");
    CHECK(doc.get_double("gamma") == 0.5);
    CHECK(doc.get_int("n_paths") == 16);
    CHECK(doc.get_or("missing", "fallback") == "fallback");
    CHECK_THROWS_AS(doc.get("missing"), ConfigError);
    CHECK_THROWS_AS(KeyValueDoc::parse_string("not a pair\n"), ConfigError);
    CHECK_THROWS_AS(doc.get_double("family"), ConfigError);
}

TEST_CASE("spec serialization round trip") {
    const auto specs = {
        NonlinearitySpec::power_law(0.5),
        NonlinearitySpec::linear(2.0),
        NonlinearitySpec::log_corrected(3.0, 0.25),
        NonlinearitySpec::power_law(1.0 / 3.0).with_truncation(17),
        NonlinearitySpec::power_law(0.5).with_rescale(0.1, 4).with_truncation(3),
        NonlinearitySpec::tabulated({{0.25, 0.5}, {1.0, 1.0}, {4.0, 2.0}}),
    };
    for (const auto& spec : specs) {
        const std::string text = spec_to_string(spec);
        const auto back = spec_from_string(text);
        CHECK(spec_to_string(back) == text);  // byte-exact round trip
        for (double u : {1e-8, 1e-3, 0.3, 0.999, 1.5, 7.0})
            CHECK(back.eval(u) == spec.eval(u));
        CHECK(back.d() == spec.d());
        CHECK(back.lipschitz_above_d() == spec.lipschitz_above_d());
    }
}

TEST_CASE("spec parsing rejects malformed input") {
    CHECK_THROWS_AS(spec_from_string("family=unknown\n"), ConfigError);
    CHECK_THROWS_AS(spec_from_string("family=powerlaw\n"), ConfigError);       // missing gamma
    CHECK_THROWS_AS(spec_from_string("family=powerlaw\ngamma=7\n"), ConfigError);
    CHECK_THROWS_AS(spec_from_string("family=tabulated\ntable=1;2\n"), ConfigError);
}

TEST_CASE("snapshot csv layout") {
    GridConfig g;
    g.L = 1.0;
    g.n_x = 4;
    g.T = 0.01;
    g.finalize();
    Trajectory traj;
    traj.grid = g;
    Field f = zero_field(g);
    f.values = {0.0, 1.0, 2.0, 1.0, 0.0};
    f.t = 0.0;
    traj.snapshots.push_back(f);
    f.t = 0.01;
    traj.snapshots.push_back(f);

    const auto path = std::filesystem::temp_directory_path() / "she_test_snap.csv";
    write_snapshot_csv(path.string(), traj);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "t,-1,-0.5,0,0.5,1");
    std::getline(in, line);
    CHECK(line.substr(0, 2) == "0,");
    int rows = 1;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 2);
    std::filesystem::remove(path);
}
