#pragma once

// Shared tiny networks with hand-checkable optima, used across the model,
// verification, rolling, and acceptance suites.

#include "gridrestore/grid.hpp"

namespace fixtures {

using namespace gridrestore;

// Two buses joined by one feeder; a fast-starting DG on bus 1, all load on
// bus 2. Lossless by default so optima stay exactly hand-computable.
inline Network pair_net(double r_ohm = 0.0, double ramp_kw_per_min = 50.0) {
    Network net;
    net.v_nom_kv = 10.0;
    net.v_min_kv = 9.5;
    net.v_max_kv = 10.5;

    Bus b1;
    b1.id = 1;
    b1.has_agent = true;
    net.buses.push_back(b1);

    Bus b2;
    b2.id = 2;
    b2.has_agent = true;
    b2.load_par[0] = {200.0, 100.0};
    b2.load_par[1] = {100.0, 50.0};
    b2.load_par[2] = {100.0, 0.0};
    net.buses.push_back(b2);

    Feeder f;
    f.from = 1;
    f.to = 2;
    f.r_ohm = r_ohm;
    f.x_ohm = 0.3;
    f.i_max_a = 200.0;
    net.feeders.push_back(f);

    DgUnit d;
    d.bus = 1;
    d.p_max_kw = 500.0;
    d.p_min_kw = 50.0;
    d.q_max_kvar = 300.0;
    d.q_min_kvar = -300.0;
    d.ramp_kw_per_min = ramp_kw_per_min;
    d.t_syn_min = 10;
    d.t_start_min = -20;
    net.dgs.push_back(d);
    return net;
}

// Three buses in a cycle; DG on bus 1, one unit of priority-1 load on each of
// buses 2 and 3. Restoring everything requires opening exactly one feeder.
inline Network tri_net() {
    Network net;
    net.v_nom_kv = 10.0;
    net.v_min_kv = 9.5;
    net.v_max_kv = 10.5;
    for (int id = 1; id <= 3; ++id) {
        Bus b;
        b.id = id;
        b.has_agent = true;
        if (id != 1) b.load_par[0] = {100.0, 40.0};
        net.buses.push_back(b);
    }
    auto mk = [&](BusId a, BusId b) {
        Feeder f;
        f.from = a;
        f.to = b;
        f.r_ohm = 0.0;
        f.x_ohm = 0.2;
        f.i_max_a = 150.0;
        net.feeders.push_back(f);
    };
    mk(1, 2);
    mk(1, 3);
    mk(2, 3);

    DgUnit d;
    d.bus = 1;
    d.p_max_kw = 400.0;
    d.p_min_kw = 20.0;
    d.q_max_kvar = 200.0;
    d.q_min_kvar = -200.0;
    d.ramp_kw_per_min = 400.0;
    d.t_syn_min = 0;
    d.t_start_min = -60;
    net.dgs.push_back(d);
    return net;
}

// A single bus carrying an energy-storage unit and its own load; no feeders.
inline Network es_net() {
    Network net;
    net.v_nom_kv = 10.0;
    net.v_min_kv = 9.5;
    net.v_max_kv = 10.5;
    Bus b;
    b.id = 1;
    b.has_agent = true;
    b.load_par[0] = {40.0, 20.0};
    net.buses.push_back(b);

    EsUnit e;
    e.bus = 1;
    e.capacity_kwh = 200.0;
    e.p_ch_max_kw = 50.0;
    e.p_dis_max_kw = 50.0;
    e.eta_ch = 0.9;
    e.eta_dis = 1.15;
    e.soc_min = 0.2;
    e.soc_max = 0.9;
    e.q_capability = {{0.0, 1.0, -0.5, 0.5}};
    net.ess.push_back(e);
    return net;
}

// Blackout state: everything available and nothing in use; DG start instants
// are taken from the static data (the unit has already black-started).
inline NetworkState dark_state(const Network& net) {
    NetworkState st;
    for (const auto& d : net.dgs) st.dg_start[d.bus] = d.t_start_min;
    for (const auto& e : net.ess) st.soc[e.bus] = 0.5;
    return st;
}

}  // namespace fixtures
