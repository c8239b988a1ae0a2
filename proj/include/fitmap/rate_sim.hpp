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
  \file rate_sim.hpp
  \brief Mean-rate functional simulator

  Feedforward graphs are evaluated exactly in topological order; cyclic
  graphs are solved by damped fixed-point iteration.  No spike-by-spike
  events, delays, or stochastic dynamics: a neuron's signal is its mean
  firing rate.
*/

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <queue>
#include <vector>

#include "error.hpp"
#include "network.hpp"

namespace fitmap
{

/*! \brief Map from neuron id to firing rate in Hz. */
using rate_vector = std::map<neuron_id, double>;

struct sim_config
{
  std::size_t max_iterations{ 10000 };
  double damping{ 0.5 };          //!< in (0, 1]; 1 disables damping
  double convergence_tol{ 1e-9 }; //!< relative rate change per sweep
};

struct sim_result
{
  rate_vector rates;
  bool converged{ true };
  std::size_t iterations{ 0 };
  double residual{ 0.0 };
};

/*! \brief Rectified saturating linear transfer function.
 *
 * rate = min(max_rate, gain * max(0, current - threshold)).  Monotone
 * nondecreasing in the input current and clamped to [0, max_rate].
 */
inline double neuron_transfer( double input_current, neuron const& params )
{
  double const driven = params.gain * std::max( 0.0, input_current - params.threshold );
  return std::min( params.max_rate, driven );
}

namespace detail
{

struct sim_graph
{
  std::vector<neuron const*> nodes;             // non-input neurons, ascending id
  std::vector<std::size_t> offsets;             // CSR offsets into edges
  std::vector<std::pair<std::size_t, double>> edges; // (source slot, weight), sorted by source id
  std::vector<double> fixed_rates;              // slot rate for input neurons, 0 otherwise
  std::vector<bool> is_input;
  std::map<neuron_id, std::size_t> slot_of;
  std::vector<neuron_id> ids;
};

inline sim_graph build_sim_graph( network const& net, rate_vector const& inputs )
{
  sim_graph g;
  std::vector<neuron const*> sorted;
  sorted.reserve( net.neurons.size() );
  for ( auto const& n : net.neurons )
    sorted.push_back( &n );
  std::sort( sorted.begin(), sorted.end(), []( neuron const* a, neuron const* b ) { return a->id < b->id; } );

  std::size_t expected_inputs = 0;
  for ( std::size_t slot = 0; slot < sorted.size(); ++slot )
  {
    auto const* n = sorted[slot];
    g.slot_of[n->id] = slot;
    g.ids.push_back( n->id );
    g.nodes.push_back( n );
    bool const input = n->kind == neuron_kind::input;
    g.is_input.push_back( input );
    if ( input )
    {
      ++expected_inputs;
      auto it = inputs.find( n->id );
      if ( it == inputs.end() )
      {
        throw error( error_code::config, "simulate: no rate supplied for input neuron " + std::to_string( n->id ) );
      }
      g.fixed_rates.push_back( it->second );
    }
    else
    {
      g.fixed_rates.push_back( 0.0 );
    }
  }
  if ( inputs.size() != expected_inputs )
  {
    throw error( error_code::config, "simulate: input rates must cover exactly the input neurons" );
  }

  // in-edges per node, summation order fixed by ascending source id
  std::vector<std::vector<std::pair<std::size_t, double>>> in( sorted.size() );
  for ( auto const& s : net.synapses )
  {
    in[g.slot_of.at( s.dst )].push_back( { g.slot_of.at( s.src ), s.weight } );
  }
  g.offsets.push_back( 0 );
  for ( auto& list : in )
  {
    std::sort( list.begin(), list.end(), []( auto const& a, auto const& b ) { return a.first < b.first; } );
    g.edges.insert( g.edges.end(), list.begin(), list.end() );
    g.offsets.push_back( g.edges.size() );
  }
  return g;
}

/*! \brief Kahn topological order; empty result if the graph has a cycle. */
inline std::vector<std::size_t> topological_order( sim_graph const& g )
{
  std::size_t const n = g.nodes.size();
  std::vector<std::size_t> indegree( n, 0 );
  std::vector<std::vector<std::size_t>> out( n );
  for ( std::size_t v = 0; v < n; ++v )
  {
    for ( std::size_t e = g.offsets[v]; e < g.offsets[v + 1]; ++e )
    {
      out[g.edges[e].first].push_back( v );
      ++indegree[v];
    }
  }
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for ( std::size_t v = 0; v < n; ++v )
  {
    if ( indegree[v] == 0 )
      ready.push( v );
  }
  std::vector<std::size_t> order;
  order.reserve( n );
  while ( !ready.empty() )
  {
    auto const v = ready.top();
    ready.pop();
    order.push_back( v );
    for ( auto const w : out[v] )
    {
      if ( --indegree[w] == 0 )
        ready.push( w );
    }
  }
  if ( order.size() != n )
    order.clear();
  return order;
}

} // namespace detail

/*! \brief Evaluates firing rates for every neuron.
 *
 * `inputs` must contain a rate for each input neuron and nothing else.
 * Acyclic networks are evaluated exactly; cyclic ones iterate
 * `r <- (1 - damping) * r + damping * f(W r)` from zero until the relative
 * change drops below `convergence_tol`.  Non-convergence is reported in
 * the result, not thrown.
 */
inline sim_result simulate( network const& net, rate_vector const& inputs, sim_config const& cfg = {} )
{
  if ( cfg.max_iterations < 1 || !( cfg.convergence_tol > 0.0 ) || !( cfg.damping > 0.0 ) || cfg.damping > 1.0 )
  {
    throw error( error_code::config, "simulate: invalid solver configuration" );
  }

  auto const g = detail::build_sim_graph( net, inputs );
  std::size_t const n = g.nodes.size();
  std::vector<double> rates( n, 0.0 );
  for ( std::size_t v = 0; v < n; ++v )
  {
    if ( g.is_input[v] )
      rates[v] = g.fixed_rates[v];
  }

  auto current_of = [&]( std::size_t v, std::vector<double> const& r ) {
    double current = 0.0;
    for ( std::size_t e = g.offsets[v]; e < g.offsets[v + 1]; ++e )
    {
      current += r[g.edges[e].first] * g.edges[e].second;
    }
    return current;
  };

  sim_result result;
  auto const order = detail::topological_order( g );
  if ( !order.empty() )
  {
    for ( auto const v : order )
    {
      if ( g.is_input[v] )
        continue;
      rates[v] = neuron_transfer( current_of( v, rates ), *g.nodes[v] );
    }
    result.converged = true;
    result.iterations = 0;
  }
  else
  {
    // damped Jacobi sweep; update order cannot influence the result
    std::vector<double> next( n, 0.0 );
    double residual = std::numeric_limits<double>::infinity();
    std::size_t iter = 0;
    for ( ; iter < cfg.max_iterations; ++iter )
    {
      residual = 0.0;
      for ( std::size_t v = 0; v < n; ++v )
      {
        if ( g.is_input[v] )
        {
          next[v] = rates[v];
          continue;
        }
        double const updated = ( 1.0 - cfg.damping ) * rates[v] + cfg.damping * neuron_transfer( current_of( v, rates ), *g.nodes[v] );
        double const scale = std::max( { std::fabs( updated ), std::fabs( rates[v] ), 1e-9 } );
        residual = std::max( residual, std::fabs( updated - rates[v] ) / scale );
        next[v] = updated;
      }
      rates.swap( next );
      if ( residual <= cfg.convergence_tol )
      {
        ++iter;
        break;
      }
    }
    result.converged = residual <= cfg.convergence_tol;
    result.iterations = iter;
    result.residual = residual;
  }

  for ( std::size_t v = 0; v < n; ++v )
  {
    result.rates[g.ids[v]] = rates[v];
  }
  return result;
}

/*! \brief Rate discrepancy between two simulations. */
struct rate_error_result
{
  double max_rel_error{ 0.0 };
  double rmse{ 0.0 };
};

/*! \brief max |test - ref| / max(|ref|, 1e-9) and RMSE over the given ids. */
inline rate_error_result rate_error( rate_vector const& reference, rate_vector const& test, std::vector<neuron_id> const& on )
{
  rate_error_result out;
  if ( on.empty() )
    return out;
  double sq_sum = 0.0;
  for ( auto const id : on )
  {
    auto const rit = reference.find( id );
    auto const tit = test.find( id );
    if ( rit == reference.end() || tit == test.end() )
    {
      throw error( error_code::config, "rate_error: neuron " + std::to_string( id ) + " missing from a rate vector" );
    }
    double const diff = std::fabs( tit->second - rit->second );
    out.max_rel_error = std::max( out.max_rel_error, diff / std::max( std::fabs( rit->second ), 1e-9 ) );
    sq_sum += diff * diff;
  }
  out.rmse = std::sqrt( sq_sum / static_cast<double>( on.size() ) );
  return out;
}

/*! \brief Index (by ascending id position) of the highest rate among `on`; ties pick the lowest id. */
inline std::size_t argmax_rate( rate_vector const& rates, std::vector<neuron_id> const& on )
{
  std::size_t best = 0;
  double best_rate = -std::numeric_limits<double>::infinity();
  for ( std::size_t i = 0; i < on.size(); ++i )
  {
    auto const it = rates.find( on[i] );
    double const r = it == rates.end() ? -std::numeric_limits<double>::infinity() : it->second;
    if ( r > best_rate )
    {
      best_rate = r;
      best = i;
    }
  }
  return best;
}

} // namespace fitmap
