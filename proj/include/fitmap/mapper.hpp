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
  \file mapper.hpp
  \brief Assignment of computation units to n x n crossbars

  A crossbar provides n shared input rows and n output columns.  A column
  implements one unit; its presynaptic lines occupy rows that all columns
  of the crossbar share, so a unit fits wherever the union of resident and
  incoming lines stays within n.  Three mappers are provided: the
  capacity-aware first-fit-decreasing packer over recombined subunits
  (drops nothing), a baseline that clusters whole neurons and truncates
  fanin beyond n, and an exhaustive minimal packer used as a test oracle.
*/

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "decompose.hpp"
#include "error.hpp"
#include "network.hpp"

namespace fitmap
{

/*! \brief Hardware capacity model: one n x n crossbar per tile. */
struct crossbar_spec
{
  std::size_t n{ 128 };
  std::optional<std::size_t> crossbar_budget{};
};

/*! \brief An input row: either an off-chip rate source or another unit's output. */
struct line_ref
{
  enum class kind_t
  {
    source,
    unit
  };

  kind_t kind{ kind_t::source };
  std::uint32_t id{ 0 };

  friend bool operator<( line_ref const& a, line_ref const& b )
  {
    return std::make_pair( static_cast<int>( a.kind ), a.id ) < std::make_pair( static_cast<int>( b.kind ), b.id );
  }
  friend bool operator==( line_ref const& a, line_ref const& b )
  {
    return a.kind == b.kind && a.id == b.id;
  }
};

struct crossbar_assignment
{
  std::vector<std::uint32_t> units;     //!< column owners, in placement order
  std::set<line_ref> input_lines;       //!< distinct rows used
  std::size_t outputs_used{ 0 };
  std::size_t crosspoints_used{ 0 };
};

struct inter_crossbar_edge
{
  std::size_t producer_crossbar{ 0 };
  std::size_t consumer_crossbar{ 0 };
  std::uint32_t source_unit{ 0 };

  friend bool operator<( inter_crossbar_edge const& a, inter_crossbar_edge const& b )
  {
    return std::tie( a.producer_crossbar, a.consumer_crossbar, a.source_unit ) < std::tie( b.producer_crossbar, b.consumer_crossbar, b.source_unit );
  }
  friend bool operator==( inter_crossbar_edge const& a, inter_crossbar_edge const& b )
  {
    return std::tie( a.producer_crossbar, a.consumer_crossbar, a.source_unit ) == std::tie( b.producer_crossbar, b.consumer_crossbar, b.source_unit );
  }
};

struct dropped_synapse
{
  neuron_id src{ 0 };
  neuron_id dst{ 0 };
  double weight{ 0.0 };
};

struct mapping
{
  std::string variant;   //!< "baseline" or "proposed"
  std::size_t crossbar_n{ 0 };
  std::vector<crossbar_assignment> crossbars;
  std::vector<inter_crossbar_edge> edges;
  std::vector<dropped_synapse> dropped;

  std::optional<std::size_t> crossbar_of( std::uint32_t unit ) const
  {
    for ( std::size_t i = 0; i < crossbars.size(); ++i )
    {
      for ( auto const u : crossbars[i].units )
      {
        if ( u == unit )
          return i;
      }
    }
    return std::nullopt;
  }

  std::size_t total_crosspoints() const
  {
    std::size_t total = 0;
    for ( auto const& xb : crossbars )
      total += xb.crosspoints_used;
    return total;
  }
};

namespace detail
{

/*! \brief One column candidate: a unit or whole neuron plus the rows it needs. */
struct pack_item
{
  std::uint32_t id{ 0 };
  std::vector<line_ref> lines;
  std::uint32_t origin{ 0 };
  std::uint32_t stage{ 1 };
};

inline bool fits_crossbar( crossbar_assignment const& xb, pack_item const& item, std::size_t n )
{
  if ( xb.outputs_used >= n )
    return false;
  std::size_t added = 0;
  for ( auto const& line : item.lines )
  {
    if ( xb.input_lines.count( line ) == 0 )
      ++added;
  }
  return xb.input_lines.size() + added <= n;
}

inline void place( crossbar_assignment& xb, pack_item const& item )
{
  xb.units.push_back( item.id );
  xb.input_lines.insert( item.lines.begin(), item.lines.end() );
  xb.outputs_used += 1;
  xb.crosspoints_used += item.lines.size();
}

/*! \brief First-fit over crossbars in creation order; opens a new one when nothing fits. */
inline mapping first_fit( std::vector<pack_item> const& items, crossbar_spec const& spec, std::string variant )
{
  mapping m;
  m.variant = std::move( variant );
  m.crossbar_n = spec.n;
  for ( auto const& item : items )
  {
    if ( item.lines.size() > spec.n )
    {
      throw error( error_code::validation, "unit " + std::to_string( item.id ) + " needs " + std::to_string( item.lines.size() ) + " input lines but the crossbar has " + std::to_string( spec.n ) );
    }
    bool placed = false;
    for ( auto& xb : m.crossbars )
    {
      if ( fits_crossbar( xb, item, spec.n ) )
      {
        place( xb, item );
        placed = true;
        break;
      }
    }
    if ( !placed )
    {
      m.crossbars.emplace_back();
      place( m.crossbars.back(), item );
    }
  }
  if ( spec.crossbar_budget && m.crossbars.size() > *spec.crossbar_budget )
  {
    throw error( error_code::capacity, m.variant + " mapping requires " + std::to_string( m.crossbars.size() ) + " crossbars, budget is " + std::to_string( *spec.crossbar_budget ) );
  }
  return m;
}

/*! \brief Records one routing event per producing unit and consuming crossbar. */
inline void collect_edges( mapping& m )
{
  std::map<std::uint32_t, std::size_t> home;
  for ( std::size_t i = 0; i < m.crossbars.size(); ++i )
  {
    for ( auto const u : m.crossbars[i].units )
      home[u] = i;
  }
  std::set<inter_crossbar_edge> edges;
  for ( std::size_t i = 0; i < m.crossbars.size(); ++i )
  {
    for ( auto const& line : m.crossbars[i].input_lines )
    {
      if ( line.kind != line_ref::kind_t::unit )
        continue;
      auto const it = home.find( line.id );
      if ( it != home.end() && it->second != i )
      {
        edges.insert( { it->second, i, line.id } );
      }
    }
  }
  m.edges.assign( edges.begin(), edges.end() );
}

inline std::vector<line_ref> unit_lines( unit_network const& unet, unit const& u )
{
  std::set<line_ref> lines;
  for ( auto const& input : u.externals )
  {
    if ( unet.is_input_source( input.source ) )
    {
      lines.insert( { line_ref::kind_t::source, input.source } );
    }
    else
    {
      lines.insert( { line_ref::kind_t::unit, unet.final_unit.at( input.source ) } );
    }
  }
  if ( u.chain_in )
  {
    lines.insert( { line_ref::kind_t::unit, *u.chain_in } );
  }
  return { lines.begin(), lines.end() };
}

inline std::vector<pack_item> proposed_items( unit_network const& unet )
{
  std::vector<pack_item> items;
  items.reserve( unet.units.size() );
  for ( auto const& u : unet.units )
  {
    items.push_back( { u.id, unit_lines( unet, u ), u.origin, u.first_stage } );
  }
  // decreasing fanin; stage-major so aligned stages of different chains pack together
  std::stable_sort( items.begin(), items.end(), []( pack_item const& a, pack_item const& b ) {
    return std::make_tuple( b.lines.size(), a.stage, a.origin, a.id ) < std::make_tuple( a.lines.size(), b.stage, b.origin, b.id );
  } );
  return items;
}

} // namespace detail

/*! \brief Capacity-aware packer over recombined subunits; never drops a synapse.
 *
 * First-fit-decreasing ordered by (fanin desc, stage asc, origin asc).
 * Chain links that land on different crossbars are recorded as
 * inter-crossbar edges for the interconnect energy model.
 */
inline mapping pack_proposed( unit_network const& unet, crossbar_spec const& spec )
{
  if ( spec.n < 2 )
  {
    throw error( error_code::config, "crossbar spec: n must be >= 2" );
  }
  auto m = detail::first_fit( detail::proposed_items( unet ), spec, "proposed" );
  detail::collect_edges( m );
  return m;
}

/*! \brief Synapses removed by baseline truncation: keeps the n largest-|weight| inputs. */
inline std::vector<dropped_synapse> baseline_drops( network const& net, std::size_t n )
{
  std::vector<dropped_synapse> dropped;
  for ( auto const& nodep : net.neurons )
  {
    if ( nodep.kind == neuron_kind::input )
      continue;
    auto inputs = ordered_fanin( net, nodep.id );
    if ( inputs.size() <= n )
      continue;
    std::stable_sort( inputs.begin(), inputs.end(), []( unit_input const& a, unit_input const& b ) {
      return std::make_pair( -std::fabs( a.weight ), a.source ) < std::make_pair( -std::fabs( b.weight ), b.source );
    } );
    for ( std::size_t i = n; i < inputs.size(); ++i )
    {
      dropped.push_back( { inputs[i].source, nodep.id, inputs[i].weight } );
    }
  }
  std::sort( dropped.begin(), dropped.end(), []( dropped_synapse const& a, dropped_synapse const& b ) {
    return std::make_pair( a.src, a.dst ) < std::make_pair( b.src, b.dst );
  } );
  return dropped;
}

/*! \brief Copy of the network without the listed synapses. */
inline network apply_drops( network const& net, std::vector<dropped_synapse> const& dropped )
{
  std::set<std::pair<neuron_id, neuron_id>> gone;
  for ( auto const& d : dropped )
    gone.insert( { d.src, d.dst } );
  network out = net;
  out.synapses.clear();
  for ( auto const& s : net.synapses )
  {
    if ( gone.count( { s.src, s.dst } ) == 0 )
      out.synapses.push_back( s );
  }
  return out;
}

/*! \brief Whole-neuron clustering with fanin truncation beyond n.
 *
 * Mirrors capacity clustering without decomposition: neurons keep their n
 * largest-|weight| synapses, the rest land in the dropped ledger, and the
 * surviving columns are packed first-fit-decreasing with line sharing.
 */
inline mapping map_baseline( network const& net, crossbar_spec const& spec )
{
  if ( spec.n < 2 )
  {
    throw error( error_code::config, "crossbar spec: n must be >= 2" );
  }
  auto const dropped = baseline_drops( net, spec.n );
  auto const kept = apply_drops( net, dropped );

  std::map<neuron_id, neuron_kind> kind_of;
  for ( auto const& n : net.neurons )
    kind_of[n.id] = n.kind;

  std::vector<detail::pack_item> items;
  for ( auto const& n : kept.neurons )
  {
    if ( n.kind == neuron_kind::input )
      continue;
    detail::pack_item item;
    item.id = n.id;
    item.origin = n.id;
    for ( auto const& input : ordered_fanin( kept, n.id ) )
    {
      auto const kind = kind_of.at( input.source ) == neuron_kind::input ? line_ref::kind_t::source : line_ref::kind_t::unit;
      item.lines.push_back( { kind, input.source } );
    }
    std::sort( item.lines.begin(), item.lines.end() );
    items.push_back( std::move( item ) );
  }
  std::stable_sort( items.begin(), items.end(), []( detail::pack_item const& a, detail::pack_item const& b ) {
    return std::make_tuple( b.lines.size(), a.id ) < std::make_tuple( a.lines.size(), b.id );
  } );

  auto m = detail::first_fit( items, spec, "baseline" );
  m.dropped = dropped;
  detail::collect_edges( m );
  return m;
}

/* verification */

namespace detail
{

struct column_truth
{
  std::uint32_t id{ 0 };
  std::vector<line_ref> lines;
};

inline void verify_against( mapping const& m, std::vector<column_truth> const& columns, crossbar_spec const& spec,
                            validation_report& report )
{
  auto add = [&]( std::string code, std::string message ) {
    report.violations.push_back( { std::move( code ), std::move( message ) } );
  };

  if ( m.crossbar_n != spec.n )
  {
    add( "spec mismatch", "mapping was packed for n = " + std::to_string( m.crossbar_n ) + ", checking against n = " + std::to_string( spec.n ) );
  }

  std::map<std::uint32_t, column_truth const*> truth;
  for ( auto const& c : columns )
    truth[c.id] = &c;

  std::map<std::uint32_t, std::size_t> seen;
  for ( std::size_t i = 0; i < m.crossbars.size(); ++i )
  {
    auto const& xb = m.crossbars[i];
    std::set<line_ref> lines;
    for ( auto const u : xb.units )
    {
      ++seen[u];
      auto const it = truth.find( u );
      if ( it == truth.end() )
      {
        add( "unknown unit", "crossbar " + std::to_string( i ) + " hosts unknown unit " + std::to_string( u ) );
        continue;
      }
      lines.insert( it->second->lines.begin(), it->second->lines.end() );
    }
    if ( lines != xb.input_lines )
    {
      add( "line mismatch", "crossbar " + std::to_string( i ) + " declares input lines inconsistent with its units" );
    }
    if ( xb.input_lines.size() > spec.n )
    {
      add( "input overflow", "crossbar " + std::to_string( i ) + " uses " + std::to_string( xb.input_lines.size() ) + " input lines, capacity " + std::to_string( spec.n ) );
    }
    if ( xb.outputs_used != xb.units.size() )
    {
      add( "output mismatch", "crossbar " + std::to_string( i ) + " declares " + std::to_string( xb.outputs_used ) + " outputs for " + std::to_string( xb.units.size() ) + " units" );
    }
    if ( xb.outputs_used > spec.n )
    {
      add( "output overflow", "crossbar " + std::to_string( i ) + " uses " + std::to_string( xb.outputs_used ) + " outputs, capacity " + std::to_string( spec.n ) );
    }
    std::size_t crosspoints = 0;
    for ( auto const u : xb.units )
    {
      auto const it = truth.find( u );
      if ( it != truth.end() )
        crosspoints += it->second->lines.size();
    }
    if ( crosspoints != xb.crosspoints_used )
    {
      add( "crosspoint mismatch", "crossbar " + std::to_string( i ) + " declares " + std::to_string( xb.crosspoints_used ) + " crosspoints, units need " + std::to_string( crosspoints ) );
    }
    if ( xb.crosspoints_used > spec.n * spec.n )
    {
      add( "crosspoint overflow", "crossbar " + std::to_string( i ) + " exceeds n^2 crosspoints" );
    }
  }

  for ( auto const& c : columns )
  {
    auto const it = seen.find( c.id );
    if ( it == seen.end() )
    {
      add( "unassigned unit", "unit " + std::to_string( c.id ) + " is not mapped to any crossbar" );
    }
    else if ( it->second > 1 )
    {
      add( "duplicate assignment", "unit " + std::to_string( c.id ) + " is mapped " + std::to_string( it->second ) + " times" );
    }
  }

  // inter-crossbar edges must match recomputation
  mapping probe = m;
  probe.edges.clear();
  collect_edges( probe );
  if ( probe.edges != m.edges )
  {
    add( "edge mismatch", "inter-crossbar edge list does not match unit placement" );
  }
}

} // namespace detail

/*! \brief Verifies a proposed mapping against its unit network. */
inline validation_report verify_mapping( mapping const& m, unit_network const& source, crossbar_spec const& spec )
{
  validation_report report;
  std::vector<detail::column_truth> columns;
  std::size_t expected_crosspoints = 0;
  for ( auto const& u : source.units )
  {
    columns.push_back( { u.id, detail::unit_lines( source, u ) } );
    expected_crosspoints += u.fanin();
  }
  detail::verify_against( m, columns, spec, report );
  if ( !m.dropped.empty() )
  {
    report.violations.push_back( { "unexpected drop", "proposed mapping lists " + std::to_string( m.dropped.size() ) + " dropped synapses" } );
  }
  if ( m.total_crosspoints() != expected_crosspoints )
  {
    report.violations.push_back( { "conservation", "mapping realizes " + std::to_string( m.total_crosspoints() ) + " crosspoints, unit network carries " + std::to_string( expected_crosspoints ) + " inputs" } );
  }
  return report;
}

/*! \brief Verifies a baseline mapping against the original network.
 *
 * Checks the accounting identity per neuron: the kept crosspoints plus the
 * dropped ledger must recover the original (source, weight) fanin multiset.
 */
inline validation_report verify_mapping( mapping const& m, network const& source, crossbar_spec const& spec )
{
  validation_report report;
  auto const kept = apply_drops( source, m.dropped );
  std::map<neuron_id, neuron_kind> kind_of;
  for ( auto const& n : source.neurons )
    kind_of[n.id] = n.kind;

  std::vector<detail::column_truth> columns;
  for ( auto const& n : kept.neurons )
  {
    if ( n.kind == neuron_kind::input )
      continue;
    detail::column_truth c;
    c.id = n.id;
    for ( auto const& input : ordered_fanin( kept, n.id ) )
    {
      auto const kind = kind_of.at( input.source ) == neuron_kind::input ? line_ref::kind_t::source : line_ref::kind_t::unit;
      c.lines.push_back( { kind, input.source } );
    }
    std::sort( c.lines.begin(), c.lines.end() );
    columns.push_back( std::move( c ) );
  }
  detail::verify_against( m, columns, spec, report );

  if ( m.total_crosspoints() + m.dropped.size() != source.synapses.size() )
  {
    report.violations.push_back( { "conservation", "kept crosspoints (" + std::to_string( m.total_crosspoints() ) + ") plus dropped (" + std::to_string( m.dropped.size() ) + ") do not recover the original synapse count (" + std::to_string( source.synapses.size() ) + ")" } );
  }
  return report;
}

/* exhaustive oracle */

/*! \brief Provably minimal crossbar count by exhaustive set partitioning.
 *
 * Only for small instances (default limit 8 subunits); larger inputs are
 * rejected with a pointer to the greedy packer.  Ties prefer the
 * lexicographically smallest assignment sequence, which makes the result
 * deterministic.
 */
inline mapping optimal_pack( unit_network const& unet, crossbar_spec const& spec, std::size_t limit = 8 )
{
  if ( unet.units.size() > limit )
  {
    throw error( error_code::config, "optimal_pack: instance has " + std::to_string( unet.units.size() ) + " subunits, limit is " + std::to_string( limit ) + "; use the greedy packer" );
  }
  std::vector<detail::pack_item> items;
  for ( auto const& u : unet.units )
  {
    items.push_back( { u.id, detail::unit_lines( unet, u ), u.origin, u.first_stage } );
  }

  std::size_t const count = items.size();
  std::vector<std::size_t> assignment( count, 0 ), best_assignment;
  std::size_t best_blocks = count + 1;

  auto feasible = [&]( std::vector<std::size_t> const& assign, std::size_t upto, std::size_t block ) {
    std::set<line_ref> lines;
    std::size_t members = 0;
    for ( std::size_t i = 0; i <= upto; ++i )
    {
      if ( assign[i] != block )
        continue;
      ++members;
      lines.insert( items[i].lines.begin(), items[i].lines.end() );
    }
    return members <= spec.n && lines.size() <= spec.n;
  };

  auto search = [&]( auto&& self, std::size_t index, std::size_t blocks ) -> void {
    if ( blocks >= best_blocks )
      return;
    if ( index == count )
    {
      best_blocks = blocks;
      best_assignment = assignment;
      return;
    }
    for ( std::size_t b = 0; b <= blocks && b < best_blocks; ++b )
    {
      assignment[index] = b;
      if ( feasible( assignment, index, b ) )
      {
        self( self, index + 1, std::max( blocks, b + 1 ) );
      }
    }
  };
  if ( count == 0 )
  {
    best_blocks = 0;
    best_assignment.clear();
  }
  else
  {
    search( search, 0, 0 );
  }
  if ( count > 0 && best_assignment.empty() )
  {
    throw error( error_code::capacity, "optimal_pack: no feasible partition (a unit exceeds crossbar capacity)" );
  }

  mapping m;
  m.variant = "optimal";
  m.crossbar_n = spec.n;
  m.crossbars.assign( best_blocks, {} );
  for ( std::size_t i = 0; i < count; ++i )
  {
    detail::place( m.crossbars[best_assignment[i]], items[i] );
  }
  if ( spec.crossbar_budget && m.crossbars.size() > *spec.crossbar_budget )
  {
    throw error( error_code::capacity, "optimal mapping requires " + std::to_string( m.crossbars.size() ) + " crossbars, budget is " + std::to_string( *spec.crossbar_budget ) );
  }
  detail::collect_edges( m );
  return m;
}

/* serialization */

inline nlohmann::ordered_json mapping_to_json( mapping const& m )
{
  nlohmann::ordered_json doc;
  doc["version"] = 1;
  doc["variant"] = m.variant;
  doc["crossbar_n"] = m.crossbar_n;
  doc["crossbars"] = nlohmann::ordered_json::array();
  for ( std::size_t i = 0; i < m.crossbars.size(); ++i )
  {
    auto const& xb = m.crossbars[i];
    nlohmann::ordered_json jx;
    jx["index"] = i;
    jx["units"] = xb.units;
    jx["input_lines"] = nlohmann::ordered_json::array();
    for ( auto const& line : xb.input_lines )
    {
      jx["input_lines"].push_back( { { "kind", line.kind == line_ref::kind_t::source ? "source" : "unit" }, { "id", line.id } } );
    }
    jx["outputs_used"] = xb.outputs_used;
    jx["crosspoints_used"] = xb.crosspoints_used;
    doc["crossbars"].push_back( jx );
  }
  doc["inter_crossbar_edges"] = nlohmann::ordered_json::array();
  for ( auto const& e : m.edges )
  {
    doc["inter_crossbar_edges"].push_back( { { "producer_crossbar", e.producer_crossbar }, { "consumer_crossbar", e.consumer_crossbar }, { "source_unit", e.source_unit } } );
  }
  doc["dropped_synapses"] = nlohmann::ordered_json::array();
  for ( auto const& d : m.dropped )
  {
    doc["dropped_synapses"].push_back( { { "src", d.src }, { "dst", d.dst }, { "weight", d.weight } } );
  }
  return doc;
}

inline std::string serialize_mapping( mapping const& m )
{
  return mapping_to_json( m ).dump( 2 ) + "\n";
}

} // namespace fitmap
