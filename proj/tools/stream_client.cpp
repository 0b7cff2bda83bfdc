#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "stls/client.hpp"
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
    CLI::App app{"Stream an STL to a manufacturer one layer at a time"};
    std::string stl_path, config_path, connect, rotate, report_path;
    bool no_supports = false;
    app.add_option("--stl", stl_path, "STL model to print")->required();
    app.add_option("--config", config_path, "print config (key=value lines)")->required();
    app.add_option("--connect", connect, "manufacturer endpoint host:port")->required();
    app.add_option("--rotate", rotate, "orientation as x,y,z degrees");
    app.add_flag("--no-supports", no_supports, "skip support generation");
    app.add_option("--report", report_path, "write the job report here");
    CLI11_PARSE(app, argc, argv);

    stls::JobReport report;
    try {
        stls::Mesh mesh = stls::load_stl_file(stl_path);
        stls::PrintConfig config = stls::PrintConfig::parse(read_file(config_path));

        stls::ClientOptions opts;
        opts.supports = !no_supports;
        if (!rotate.empty()) {
            double rx, ry, rz;
            char c1, c2;
            std::istringstream in(rotate);
            if (!(in >> rx >> c1 >> ry >> c2 >> rz) || c1 != ',' || c2 != ',')
                throw stls::Error("bad --rotate value '" + rotate + "'");
            opts.orientation = stls::RigidTransform::from_euler_deg(rx, ry, rz);
        }

        size_t colon = connect.rfind(':');
        if (colon == std::string::npos)
            throw stls::Error("bad --connect value '" + connect + "'");
        auto stream = stls::tcp_connect(connect.substr(0, colon),
                                        std::stoi(connect.substr(colon + 1)));

        report = stls::run_client(mesh, config, stream, opts);
    } catch (const stls::TransportError& e) {
        report.outcome = stls::Outcome::transport;
        report.status = e.what();
    } catch (const std::exception& e) {
        report.outcome = stls::Outcome::geometry;
        report.status = e.what();
    }
    report.role = "client";

    if (!report_path.empty()) std::ofstream(report_path) << report.to_text();
    std::cerr << report.status << "\n";
    return report.exit_code();
}
