// Writes the image fixtures used by the command-line tests into a directory.
#include <cstdio>
#include <filesystem>
#include <string>

#include "fixtures.hpp"
#include "helipad/io.hpp"
#include "helipad/sim.hpp"

using namespace helipad;
namespace fs = std::filesystem;

namespace {

void sequence(const fs::path& dir, int n, int occlude_from, int occlude_to) {
  fs::create_directories(dir);
  const PinholeCamera cam;
  const HelipadSpec pad;
  for (int k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / (n - 1);
    const QuadState s{0.2 - 0.3 * t, -0.1 + 0.2 * t, 3.0 / (1.0 + 0.5 * t), 0.4};
    GrayImage f = render_view(s, cam, pad);
    if (k >= occlude_from && k < occlude_to) {
      for (int v = 0; v < f.height(); ++v)
        for (int u = 120; u < 520; ++u) f(u, v) = 110;
    }
    char name[32];
    std::snprintf(name, sizeof name, "frame_%d.pgm", k);
    write_pgm(dir / name, f);
  }
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: make_fixtures <dir>\n");
    return 1;
  }
  const fs::path dir = argv[1];
  fs::create_directories(dir);
  const PinholeCamera cam;
  const HelipadSpec pad;
  write_pgm(dir / "pad.pgm", render_view({0.1, -0.05, 1.8, 0.6}, cam, pad));
  write_pgm(dir / "nadir.pgm", render_view({0, 0, 1.2, 0}, cam, pad));
  write_pgm(dir / "nadir_rot30.pgm", render_view({0, 0, 1.2, 30.0 * 3.141592653589793 / 180.0}, cam, pad));
  fixtures::Scene circle;
  circle.letter = false;
  write_pgm(dir / "circle.pgm", circle.render(2));
  write_pgm(dir / "blank.pgm", GrayImage(640, 368, 110));

  sequence(dir / "descent", 200, -1, -1);
  sequence(dir / "occluded", 40, 15, 18);
  fs::create_directories(dir / "single");
  fs::copy_file(dir / "pad.pgm", dir / "single" / "frame_0.pgm", fs::copy_options::overwrite_existing);
  fs::create_directories(dir / "empty");
  return 0;
}
