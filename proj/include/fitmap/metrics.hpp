/* fitmap: spiking-network-to-crossbar mapping library
 * Copyright (C) 2026  The fitmap authors
 *
 * Permission is hereby granted, free of charge, to any person
 * obtaining a copy of this software and associated documentation
 * files (the "Software"), to deal in the Software without
 * restriction, including without limitation the rights to use,
 * copy, modify, merge, publish, distribute, sublicense, and/or sell
 * copies of the Software, and to permit persons to whom the
 * Software is furnished to do so, subject to the following
 * conditions:
 *
 * The above copyright notice and this permission notice shall be
 * included in all copies or substantial portions of the Software.
 *
 * THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND,
 * EXPRESS OR IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES
 * OF MERCHANTABILITY, FITNESS FOR A PARTICULAR PURPOSE AND
 * NONINFRINGEMENT. IN NO EVENT SHALL THE AUTHORS OR COPYRIGHT
 * HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER LIABILITY,
 * WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING
 * FROM, OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR
 * OTHER DEALINGS IN THE SOFTWARE.
 */

/*!
  \file metrics.hpp
  \brief Crossbar count, utilization, wasted and interconnect energy, and
         the baseline-versus-proposed comparison report
*/

#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "mapper.hpp"
#include "network.hpp"
#include "rate_sim.hpp"

namespace fitmap
{

/*! \brief Per-event and per-idle-cell energies, in joules.
 *
 * Defaults model a 128 x 128 tile: 50 pJ per spike at 30 Hz, 147 pJ per
 * routing event, and accounting energies of 50 pJ per unused neuron cell
 * and 1 pJ per unused synapse cell.  The switch bandwidth is recorded for
 * completeness and never consulted.
 */
struct energy_model
{
  double e_spike{ 50e-12 };
  double e_route{ 147e-12 };
  double e_idle_neuron{ 50e-12 };
  double e_idle_synapse{ 1e-12 };
  double switch_bandwidth_events_per_s{ 1.8e9 };
};

struct utilization_result
{
  double neuron_pct{ 0.0 };
  double synapse_pct{ 0.0 };
};

/*! \brief Output columns used over allocated columns, crosspoints used over allocated crosspoints. */
inline utilization_result utilization( mapping const& m, crossbar_spec const& spec )
{
  utilization_result out;
  if ( m.crossbars.empty() )
    return out;
  std::size_t outputs = 0, crosspoints = 0;
  for ( auto const& xb : m.crossbars )
  {
    outputs += xb.outputs_used;
    crosspoints += xb.crosspoints_used;
  }
  double const cells = static_cast<double>( m.crossbars.size() ) * static_cast<double>( spec.n );
  out.neuron_pct = 100.0 * static_cast<double>( outputs ) / cells;
  out.synapse_pct = 100.0 * static_cast<double>( crosspoints ) / ( cells * static_cast<double>( spec.n ) );
  return out;
}

/*! \brief Accounting energy of unused neuron and synapse cells across all allocated crossbars. */
inline double wasted_energy( mapping const& m, crossbar_spec const& spec, energy_model const& em )
{
  double total = 0.0;
  for ( auto const& xb : m.crossbars )
  {
    total += static_cast<double>( spec.n - xb.outputs_used ) * em.e_idle_neuron;
    total += static_cast<double>( spec.n * spec.n - xb.crosspoints_used ) * em.e_idle_synapse;
  }
  return total;
}

/*! \brief Routing energy of spikes crossing crossbar boundaries.
 *
 * Every inter-crossbar edge costs rate(producer) * window * e_route.
 * `rates` must cover each producing unit of the edge list.
 */
inline double interconnect_energy( mapping const& m, rate_vector const& rates, double window_s, energy_model const& em )
{
  double total = 0.0;
  for ( auto const& e : m.edges )
  {
    auto const it = rates.find( e.source_unit );
    if ( it == rates.end() )
    {
      throw error( error_code::config, "interconnect_energy: no rate for producing unit " + std::to_string( e.source_unit ) );
    }
    total += it->second * window_s * em.e_route;
  }
  return total;
}

/*! \brief One side of the comparison. */
struct variant_metrics
{
  std::size_t crossbar_count{ 0 };
  double neuron_utilization_pct{ 0.0 };
  double synapse_utilization_pct{ 0.0 };
  double wasted_energy_j{ 0.0 };
  double interconnect_energy_j{ 0.0 };
  std::size_t dropped_synapse_count{ 0 };
  double max_rel_rate_error{ 0.0 };
  double argmax_match_rate{ 1.0 };
};

/*! \brief Side-by-side metrics with ratios normalized to the baseline. */
struct compare_report_t
{
  std::string source_name;
  std::uint64_t source_fingerprint{ 0 };
  std::size_t source_neurons{ 0 };
  std::size_t source_synapses{ 0 };
  variant_metrics baseline;
  variant_metrics proposed;
  std::map<std::string, double> ratios; //!< proposed / baseline where baseline is nonzero
};

/*! \brief Inputs for one comparison side: the mapping plus simulation results. */
struct variant_inputs
{
  mapping map;
  std::uint64_t source_fingerprint{ 0 };
  double max_rel_rate_error{ 0.0 };
  double argmax_match_rate{ 1.0 };
  rate_vector producer_rates; //!< batch-mean rate per producing column
};

/*! \brief Assembles the comparison; both sides must stem from the same source network. */
inline compare_report_t compare_report( variant_inputs const& baseline, variant_inputs const& proposed,
                                        crossbar_spec const& spec, energy_model const& em, double window_s = 1.0 )
{
  if ( baseline.source_fingerprint != proposed.source_fingerprint )
  {
    throw error( error_code::config, "compare_report: variants were computed from different source networks" );
  }

  compare_report_t report;
  report.source_fingerprint = baseline.source_fingerprint;
  auto fill = [&]( variant_inputs const& in ) {
    variant_metrics vm;
    vm.crossbar_count = in.map.crossbars.size();
    auto const util = utilization( in.map, spec );
    vm.neuron_utilization_pct = util.neuron_pct;
    vm.synapse_utilization_pct = util.synapse_pct;
    vm.wasted_energy_j = wasted_energy( in.map, spec, em );
    vm.interconnect_energy_j = interconnect_energy( in.map, in.producer_rates, window_s, em );
    vm.dropped_synapse_count = in.map.dropped.size();
    vm.max_rel_rate_error = in.max_rel_rate_error;
    vm.argmax_match_rate = in.argmax_match_rate;
    return vm;
  };
  report.baseline = fill( baseline );
  report.proposed = fill( proposed );

  auto ratio = [&]( std::string const& key, double p, double b ) {
    if ( b != 0.0 )
      report.ratios[key] = p / b;
  };
  ratio( "crossbar_count", static_cast<double>( report.proposed.crossbar_count ), static_cast<double>( report.baseline.crossbar_count ) );
  ratio( "neuron_utilization", report.proposed.neuron_utilization_pct, report.baseline.neuron_utilization_pct );
  ratio( "synapse_utilization", report.proposed.synapse_utilization_pct, report.baseline.synapse_utilization_pct );
  ratio( "wasted_energy", report.proposed.wasted_energy_j, report.baseline.wasted_energy_j );
  ratio( "interconnect_energy", report.proposed.interconnect_energy_j, report.baseline.interconnect_energy_j );
  return report;
}

/* serialization */

inline nlohmann::ordered_json report_to_json( compare_report_t const& report )
{
  auto variant = []( variant_metrics const& vm ) {
    nlohmann::ordered_json jv;
    jv["crossbar_count"] = vm.crossbar_count;
    jv["neuron_utilization_pct"] = vm.neuron_utilization_pct;
    jv["synapse_utilization_pct"] = vm.synapse_utilization_pct;
    jv["wasted_energy_j"] = vm.wasted_energy_j;
    jv["interconnect_energy_j"] = vm.interconnect_energy_j;
    jv["dropped_synapse_count"] = vm.dropped_synapse_count;
    jv["max_rel_rate_error"] = vm.max_rel_rate_error;
    jv["argmax_match_rate"] = vm.argmax_match_rate;
    return jv;
  };

  nlohmann::ordered_json doc;
  doc["version"] = 1;
  doc["source"] = { { "name", report.source_name },
                    { "fingerprint", report.source_fingerprint },
                    { "neurons", report.source_neurons },
                    { "synapses", report.source_synapses } };
  doc["baseline"] = variant( report.baseline );
  doc["proposed"] = variant( report.proposed );
  doc["ratio_proposed_over_baseline"] = nlohmann::ordered_json::object();
  for ( auto const& [key, value] : report.ratios )
  {
    doc["ratio_proposed_over_baseline"][key] = value;
  }
  return doc;
}

inline std::string serialize_report( compare_report_t const& report )
{
  return report_to_json( report ).dump( 2 ) + "\n";
}

/*! \brief Per-crossbar rows for plotting. */
inline std::string report_csv( mapping const& baseline, mapping const& proposed )
{
  std::ostringstream os;
  os << "variant,crossbar,units,input_lines,outputs_used,crosspoints_used\n";
  auto rows = [&]( mapping const& m ) {
    for ( std::size_t i = 0; i < m.crossbars.size(); ++i )
    {
      auto const& xb = m.crossbars[i];
      os << m.variant << "," << i << "," << xb.units.size() << "," << xb.input_lines.size() << "," << xb.outputs_used << "," << xb.crosspoints_used << "\n";
    }
  };
  rows( baseline );
  rows( proposed );
  return os.str();
}

} // namespace fitmap
