#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "stls/slicer.hpp"
#include "stls/stl_io.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw stls::Error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Whole-mesh single-pass slice (the normal-print baseline)"};
    std::string stl_path, config_path, machine_path, out_path;
    app.add_option("--stl", stl_path, "STL model")->required();
    app.add_option("--config", config_path, "print config")->required();
    app.add_option("--machine", machine_path, "machine spec file")->required();
    app.add_option("--out", out_path, "output G-code path")->required();
    CLI11_PARSE(app, argc, argv);

    try {
        stls::Mesh mesh = stls::drop_to_bed(stls::load_stl_file(stl_path));
        stls::PrintConfig config = stls::PrintConfig::parse(read_file(config_path));
        stls::MachineSpec machine = stls::MachineSpec::parse(read_file(machine_path));
        stls::GcodeProgram program = stls::monoslice(mesh, config, machine);
        std::ofstream(out_path) << program.to_text();
        return 0;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 4;
    }
}
