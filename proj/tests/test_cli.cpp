#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "opo/csv.hpp"

namespace {

std::string binary_path() {
    const char* env = std::getenv("OPOTK_BIN");
    REQUIRE_MESSAGE(env != nullptr, "OPOTK_BIN must point at the opotk binary");
    return env;
}

int run(const std::string& args, const std::string& log = "/dev/null") {
    const std::string cmd = binary_path() + " " + args + " > " + log + " 2>&1";
    const int status = std::system(cmd.c_str());
    if (status < 0) return -1;
#ifdef WEXITSTATUS
    return WEXITSTATUS(status);
#else
    return status;
#endif
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST_CASE("cli: repeated invocations are byte-identical") {
    CHECK(run("sim lock --duration-s 1 --sample-rate-hz 1000 --seed 21 --out /tmp/opotk_t1.csv") ==
          0);
    CHECK(run("sim lock --duration-s 1 --sample-rate-hz 1000 --seed 21 --out /tmp/opotk_t2.csv") ==
          0);
    const auto a = slurp("/tmp/opotk_t1.csv");
    const auto b = slurp("/tmp/opotk_t2.csv");
    REQUIRE(!a.empty());
    CHECK(a == b);

    CHECK(run("cluster map --span-nm 600 --out /tmp/opotk_t3.csv") == 0);
    CHECK(run("cluster map --span-nm 600 --out /tmp/opotk_t4.csv") == 0);
    CHECK(slurp("/tmp/opotk_t3.csv") == slurp("/tmp/opotk_t4.csv"));
}

TEST_CASE("cli: cluster map emits the documented columns") {
    CHECK(run("cluster map --span-nm 600 --out /tmp/opotk_map.csv") == 0);
    const auto table = opo::read_csv("/tmp/opotk_map.csv");
    const std::vector<std::string> expected{"L_offset_nm", "p_s",     "p_i",
                                            "nu_s_Hz",     "nu_i_Hz", "beat_Hz",
                                            "cluster_label", "intra_label"};
    CHECK(table.columns == expected);
    CHECK(table.rows.size() > 4);
}

TEST_CASE("cli: sim output carries time, beat, detuning, power and hop columns") {
    CHECK(run("sim free --duration-s 1 --sample-rate-hz 500 --seed 4 --out /tmp/opotk_run.csv") ==
          0);
    const auto table = opo::read_csv("/tmp/opotk_run.csv");
    const std::vector<std::string> expected{"t_s", "nu_minus_Hz", "nu_plus_detuning_Hz",
                                            "power_W", "hop_flag"};
    CHECK(table.columns == expected);
    CHECK(table.rows.size() == 500);
}

TEST_CASE("cli: tune matrix prints the measured coefficients") {
    CHECK(run("tune matrix", "/tmp/opotk_matrix.txt") == 0);
    const auto text = slurp("/tmp/opotk_matrix.txt");
    CHECK(text.find("-5.1") != std::string::npos);
    CHECK(text.find("-2.120") != std::string::npos);
    CHECK(text.find("(1, 0)") != std::string::npos);
}

TEST_CASE("cli: gen and fit round-trip through csv files") {
    CHECK(run("gen efficiency --pth 0.0256 --k 3.26 --n-points 20 --noise 0 "
              "--out /tmp/opotk_eff.csv") == 0);
    CHECK(run("fit efficiency --data /tmp/opotk_eff.csv --out /tmp/opotk_fit.csv") == 0);
    const auto fit = opo::read_csv("/tmp/opotk_fit.csv");
    CHECK(fit.column("p_threshold_W").at(0) == doctest::Approx(0.0256).epsilon(1e-6));
    CHECK(fit.column("k_factor").at(0) == doctest::Approx(3.26).epsilon(1e-6));
}

TEST_CASE("cli: invalid config exits 2 naming the key, numeric trouble exits 3") {
    std::ofstream bad("/tmp/opotk_bad.conf");
    bad << "[cavity]\nflux_capacitor = 1\n";
    bad.close();
    CHECK(run("tune matrix --config /tmp/opotk_bad.conf", "/tmp/opotk_err.txt") == 2);
    CHECK(slurp("/tmp/opotk_err.txt").find("flux_capacitor") != std::string::npos);

    CHECK(run("fit efficiency --data /tmp/no_such_file.csv --out /tmp/opotk_x.csv",
              "/tmp/opotk_err2.txt") == 3);
    CHECK(slurp("/tmp/opotk_err2.txt").find("error: numeric:") != std::string::npos);
}
