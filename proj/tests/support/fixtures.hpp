#pragma once

// Shared test fixtures.  The four-node toy: two parallel ground routes
// 1->2->4 and 1->3->4 plus an air shuttle between vertiports 2 and 3.
// Demands: 5 trips/h from node 1 to node 2, 10 trips/h from node 1 to 4.
// (Nodes are 0-based in memory; names in comments use 1-based file ids.)

#include <vector>

#include "vertiflow/netmodel.hpp"

namespace vertiflow::testsupport {

/// Links: 1:1->2  2:1->3  3:2->4  4:3->4  5:2->3(air)  6:3->2(air),
/// free times (1,1,1,1,0.2,0.2), capacities from the argument.
inline HybridNetwork toy_network(const std::vector<double>& caps = {8, 8, 8, 8, 4, 4}) {
    HybridNetwork net;
    net.node_count = 4;
    net.links = {
        {0, 1, LinkKind::ground, 1.0, caps[0]},
        {0, 2, LinkKind::ground, 1.0, caps[1]},
        {1, 3, LinkKind::ground, 1.0, caps[2]},
        {2, 3, LinkKind::ground, 1.0, caps[3]},
        {1, 2, LinkKind::air, 0.2, caps[4]},
        {2, 1, LinkKind::air, 0.2, caps[5]},
    };
    net.vertiports = {1, 2};
    return net;
}

inline std::vector<TripDemand> toy_trips() {
    return {{0, 1, 5.0}, {0, 3, 10.0}};
}

inline DemandTable toy_demand() {
    return balance_demand(toy_trips(), {1, 3}, 4);
}

/// A feasible (not optimal) flow for the toy: direct 1->2 for the first
/// commodity; the second splits 3 on 1->2->4, 7 on 1->3->4 and reroutes
/// 4 of those through the 3->2 air link and back via 2->4.
inline Mat toy_example_flow() {
    Mat x(6, 2);
    x(0, 0) = 5.0;
    x(0, 1) = 3.0;
    x(1, 1) = 7.0;
    x(2, 1) = 7.0;
    x(3, 1) = 3.0;
    x(5, 1) = 4.0;
    return x;
}

} // namespace vertiflow::testsupport
