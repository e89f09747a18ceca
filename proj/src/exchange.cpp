#include <algorithm>

#include "dpafd/engine.hpp"

namespace dpafd {

ExchangeResult inter_network_exchange(const std::vector<NetworkOutcome>& outcomes) {
    ExchangeResult out;
    for (const auto& self : outcomes) {
        MergedView view{self.network_id, self.gateway, self.faulty, {}};
        for (const auto& peer : outcomes) {
            if (&peer == &self) {
                continue;
            }
            Message m{peer.gateway, self.gateway, 0, InterNetworkReport{peer.network_id, peer.faulty}};
            check_message(m);
            const auto& report = std::get<InterNetworkReport>(m.body);
            view.received.emplace_back(report.origin_network, report.faulty);
            out.messages.push_back(std::move(m));
        }
        out.views.push_back(std::move(view));
    }
    return out;
}

std::string choose_gateway(const Scenario& s, const NetworkState& state, const CycleReport& last) {
    if (s.gateway) {
        return *s.gateway;
    }
    for (const auto& n : state.topology.nodes()) {
        if (std::find(last.faulty_found.begin(), last.faulty_found.end(), n.label) == last.faulty_found.end() &&
            state.conditions[n.ordinal] != NodeCondition::Crashed) {
            return n.label;
        }
    }
    throw ScenarioError("network " + s.network_id + " has no fault-free node to act as gateway");
}

}  // namespace dpafd
