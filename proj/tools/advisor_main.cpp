#include <cstdio>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "advisory.hpp"
#include "httplib.h"

int main(int argc, char** argv) {
    CLI::App app{"Operator advisory service: risk evaluation, prediction, what-if comparison"};
    int port = 8080;
    std::string store_dir = ".";
    std::string ui_dir = "ui";
    app.add_option("--port", port, "Listen port")->check(CLI::Range(1, 65535));
    app.add_option("--store-dir", store_dir, "Directory of case/model/pool artifacts");
    app.add_option("--ui-dir", ui_dir, "Static assets for the web console (optional)");
    CLI11_PARSE(app, argc, argv);

    auto store = std::make_shared<gridcast::advisory::Store>(store_dir);
    httplib::Server server;
    gridcast::advisory::register_routes(server, store, ui_dir);

    std::printf("advisor listening on 0.0.0.0:%d (store: %s)\n", port, store_dir.c_str());
    std::fflush(stdout);
    if (!server.listen("0.0.0.0", port)) {
        std::fprintf(stderr, "failed to bind port %d\n", port);
        return 1;
    }
    return 0;
}
