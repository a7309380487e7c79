#include "respnav/error.hpp"
#include "respnav/experiment.hpp"
#include "respnav/raw_io.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace respnav;
namespace fs = std::filesystem;

namespace {

fs::path scratch(std::string const &name)
{
  auto const dir = fs::temp_directory_path() / ("respnav_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ExperimentConfig small_experiment()
{
  ExperimentConfig c;
  c.pattern = fixtures::small_pattern(20.0);
  c.phantom = fixtures::small_phantom();
  c.phantom.noise_sigma = 0.5;
  c.motion.rois = {{"wall", 8, 20, 16, 8, Axis::AP}, {"blob", 5, 7, 14, 14, Axis::SI}};
  c.motion.search_radius_px = 3;
  c.phases = 4;
  c.recon.iterations = 4;
  c.recon.temporal_levels = 1;
  return c;
}

int cli(std::string const &args, fs::path const &log)
{
  std::string const cmd = std::string("\"") + RESPNAV_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  int const status = std::system(cmd.c_str());
#ifdef WEXITSTATUS
  return WEXITSTATUS(status);
#else
  return status;
#endif
}

std::string slurp(fs::path const &p)
{
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

} // namespace

TEST(RawIo, RoundTrip)
{
  auto p = fixtures::small_phantom();
  p.noise_sigma = 0.7;
  auto const raw = simulate_acquisition(p, generate_schedule(fixtures::small_pattern(3.0)));
  auto const dir = scratch("rawio");
  write_raw(raw, dir / "scan");
  EXPECT_TRUE(fs::exists(raw_sidecar_path(dir / "scan")));
  EXPECT_TRUE(fs::exists(raw_blob_path(dir / "scan")));
  auto const back = read_raw(dir / "scan");
  EXPECT_EQ(back.samples, raw.samples);
  EXPECT_EQ(back.coils, raw.coils);
  EXPECT_EQ(back.nx, raw.nx);
  EXPECT_EQ(back.trigger_times_s, raw.trigger_times_s);
  EXPECT_EQ(back.truth.nav_ap, raw.truth.nav_ap);
  EXPECT_EQ(nlohmann::json(back.schedule), nlohmann::json(raw.schedule));
  ASSERT_EQ(back.coil_maps.size(), raw.coil_maps.size());
  EXPECT_EQ(back.coil_maps[1].data, raw.coil_maps[1].data);

  fs::resize_file(raw_blob_path(dir / "scan"), fs::file_size(raw_blob_path(dir / "scan")) - 8);
  EXPECT_THROW(read_raw(dir / "scan"), FormatError);
  EXPECT_THROW(read_raw(dir / "missing"), FormatError);
  fs::remove_all(dir);
}

TEST(Float32, LittleEndianLayout)
{
  std::stringstream ss;
  std::vector<float> const v{1.0f, -2.5f};
  write_f32le(ss, v);
  std::string const bytes = ss.str();
  ASSERT_EQ(bytes.size(), 8u);
  EXPECT_EQ(static_cast<unsigned char>(bytes[3]), 0x3Fu);
  EXPECT_EQ(static_cast<unsigned char>(bytes[2]), 0x80u);
  std::vector<float> back(2);
  read_f32le(ss, back);
  EXPECT_EQ(back, v);
}

TEST(ExperimentConfig, JsonRoundTripAndChecks)
{
  auto const c = small_experiment();
  nlohmann::json const j = c;
  EXPECT_EQ(nlohmann::json(j.get<ExperimentConfig>()), j);
  EXPECT_NO_THROW(c.resolved());
  auto bad = c;
  bad.phantom.grid = {64, 64, 18};
  EXPECT_THROW(bad.resolved(), Error);
  auto seeded = c;
  seeded.seed = 77;
  auto const r = seeded.resolved();
  EXPECT_EQ(r.phantom.seed, 77u);
}

TEST(Cli, StagesAndExitCodes)
{
  auto const dir = scratch("cli");
  auto const log = dir / "log.txt";
  {
    std::ofstream os(dir / "config.json");
    os << nlohmann::json(small_experiment()).dump(2);
  }
  auto const d = dir.string();
  ASSERT_EQ(cli("pattern --config " + d + "/config.json --out " + d + "/schedule.json", log), 0) << slurp(log);
  EXPECT_TRUE(fs::exists(dir / "schedule.json"));
  ASSERT_EQ(cli("simulate --config " + d + "/config.json --out " + d + "/scan", log), 0) << slurp(log);
  ASSERT_EQ(cli("navimages --raw " + d + "/scan --out " + d + "/navs", log), 0) << slurp(log);
  EXPECT_FALSE(fs::is_empty(dir / "navs"));
  {
    std::ofstream os(dir / "rois.json");
    os << nlohmann::json(small_experiment().motion).dump();
  }
  ASSERT_EQ(cli("motion --raw " + d + "/scan --rois " + d + "/rois.json --mode 2d --out " + d + "/trace.json", log), 0)
      << slurp(log);
  ASSERT_EQ(cli("motion --raw " + d + "/scan --mode 1d --out " + d + "/trace1d.json", log), 0) << slurp(log);
  ASSERT_EQ(cli("bin --trace " + d + "/trace.json --raw " + d + "/scan --phases 4 --out " + d + "/bins.json", log), 0)
      << slurp(log);
  ASSERT_EQ(cli("bin --trace " + d + "/trace1d.json --raw " + d + "/scan --phases 4 --out " + d + "/bins1d.json", log),
            0)
      << slurp(log);
  ASSERT_EQ(cli("recon --raw " + d + "/scan --bins " + d + "/bins.json --mode zf --out " + d + "/gated.rnavvol", log), 0)
      << slurp(log);
  ASSERT_EQ(cli("recon --raw " + d + "/scan --phases 4 --mode cs --config " + d + "/config.json --out " + d +
                    "/all.rnavvol",
                log),
            0)
      << slurp(log);
  ASSERT_EQ(cli("metrics --vols " + d + "/gated.rnavvol " + d + "/all.rnavvol --out " + d + "/metrics.json", log), 0)
      << slurp(log);
  ASSERT_EQ(cli("compare --vols " + d + "/gated.rnavvol " + d + "/all.rnavvol --names gated all --out " + d + "/cmp",
                log),
            0)
      << slurp(log);
  EXPECT_TRUE(fs::exists(dir / "cmp" / "table.txt"));

  EXPECT_EQ(cli("recon --raw " + d + "/nothing --out " + d + "/x.rnavvol", log), exit_codes::recon);
  {
    std::ofstream os(dir / "broken.json");
    os << "{\"pattern\": {\"ny\": 7}}";
  }
  EXPECT_EQ(cli("pattern --config " + d + "/broken.json --out " + d + "/s.json", log), exit_codes::pattern);
  EXPECT_NE(cli("no-such-command", log), 0);
  fs::remove_all(dir);
}

TEST(Cli, RunWritesManifest)
{
  auto const dir = scratch("cli_run");
  {
    std::ofstream os(dir / "config.json");
    os << nlohmann::json(small_experiment()).dump(2);
  }
  auto const log = dir / "log.txt";
  ASSERT_EQ(cli("run --config " + (dir / "config.json").string() + " --out " + (dir / "out").string(), log), 0)
      << slurp(log);
  auto const manifest = nlohmann::json::parse(slurp(dir / "out" / "manifest.json"));
  EXPECT_FALSE(manifest.empty());
  fs::remove_all(dir);
}
