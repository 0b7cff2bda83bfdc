#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "stls/server.hpp"

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
    CLI::App app{"Manufacturer daemon: accepts one streamed job per connection"};
    std::string machine_path, listen = "127.0.0.1:0", printer = "sim", workdir, report_path;
    int pipeline_depth = 2;
    double fetch_latency = 0;
    bool once = false;
    app.add_option("--machine", machine_path, "machine spec file")->required();
    app.add_option("--listen", listen, "listen endpoint host:port (port 0 = ephemeral)");
    app.add_option("--printer", printer, "sim | pipe:HOST:PORT");
    app.add_option("--workdir", workdir, "layer artifact sandbox directory");
    app.add_option("--pipeline-depth", pipeline_depth, "1 or 2")
        ->check(CLI::Range(1, 2));
    app.add_option("--fetch-latency", fetch_latency,
                   "injected per-layer fetch cost, printer sim seconds");
    app.add_flag("--once", once, "exit after the first job");
    app.add_option("--report", report_path, "write the last job report here");
    CLI11_PARSE(app, argc, argv);

    try {
        stls::MachineSpec machine = stls::MachineSpec::parse(read_file(machine_path));

        size_t colon = listen.rfind(':');
        if (colon == std::string::npos)
            throw stls::Error("bad --listen value '" + listen + "'");
        stls::TcpListener listener(listen.substr(0, colon),
                                   std::stoi(listen.substr(colon + 1)));
        std::cout << "listening on port " << listener.port() << std::endl;

        stls::ServerOptions opts;
        opts.workdir = workdir;
        opts.pipeline_depth = pipeline_depth;
        opts.fetch_latency_sim = fetch_latency;

        int last_exit = 0;
        do {
            auto conn = listener.accept();
            std::unique_ptr<stls::PrinterChannel> channel;
            std::shared_ptr<stls::PrinterSim> sim;
            if (printer == "sim") {
                sim = std::make_shared<stls::PrinterSim>(machine);
                channel = std::make_unique<stls::SimPrinterChannel>(sim);
            } else if (printer.rfind("pipe:", 0) == 0) {
                std::string addr = printer.substr(5);
                size_t c = addr.rfind(':');
                if (c == std::string::npos)
                    throw stls::Error("bad --printer value '" + printer + "'");
                channel = std::make_unique<stls::StreamPrinterChannel>(
                    stls::tcp_connect(addr.substr(0, c), std::stoi(addr.substr(c + 1))));
            } else {
                throw stls::Error("bad --printer value '" + printer + "'");
            }

            stls::JobReport report =
                stls::run_manufacturer_session(conn, machine, *channel, opts);
            if (!report_path.empty()) std::ofstream(report_path) << report.to_text();
            std::cerr << report.status << "\n";
            last_exit = report.exit_code();
        } while (!once);
        return last_exit;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 4;
    }
}
