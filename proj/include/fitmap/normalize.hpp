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
  \file normalize.hpp
  \brief Per-stage weight normalization from batch activation maxima

  Stage factors come from activations of the original model over a
  calibration batch: the first stage of a chain is scaled by
  k * max|a_1 + a_2|, every later stage j by k * max|a_{j+1}|, where a_i
  is the rate on the i-th input times its weight.  The factor of the
  consuming unit divides all of its inputs, and edges between units carry
  the producer's scale forward, so each unit fires at exactly its original
  partial sum divided by its own stage factor.  The per-neuron scale is
  reported so callers can de-normalize rates for fidelity comparison.
*/

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "decompose.hpp"
#include "error.hpp"
#include "network.hpp"
#include "rate_sim.hpp"

namespace fitmap
{

/*! \brief Batch activation maxima per neuron, in chain input order. */
struct activation_stats
{
  struct per_neuron
  {
    std::vector<double> index_max; //!< index_max[i-1] = max over batch of |rate(n_i) * w_i|
    double pair_max{ 0.0 };        //!< max over batch of |a_1 + a_2|
  };

  std::map<neuron_id, per_neuron> by_neuron;
  std::size_t batch_size{ 0 };
};

/*! \brief Simulates the original network per batch sample and records activation maxima.
 *
 * Maxima are taken over magnitudes, which keeps factors positive for
 * inhibitory weights.  Non-convergence of any sample is propagated.
 */
inline activation_stats collect_activation_stats( network const& net, std::vector<rate_vector> const& batch,
                                                  sim_config const& cfg = {} )
{
  if ( batch.empty() )
  {
    throw error( error_code::config, "collect_activation_stats: batch must be nonempty" );
  }

  activation_stats stats;
  stats.batch_size = batch.size();
  std::map<neuron_id, std::vector<unit_input>> inputs_of;
  for ( auto const& n : net.neurons )
  {
    if ( n.kind == neuron_kind::input )
      continue;
    auto inputs = ordered_fanin( net, n.id );
    stats.by_neuron[n.id].index_max.assign( inputs.size(), 0.0 );
    inputs_of[n.id] = std::move( inputs );
  }

  for ( std::size_t b = 0; b < batch.size(); ++b )
  {
    auto const result = simulate( net, batch[b], cfg );
    if ( !result.converged )
    {
      throw error( error_code::convergence, "calibration sample " + std::to_string( b ) + " did not converge (residual " + std::to_string( result.residual ) + ")" );
    }
    for ( auto& [id, record] : stats.by_neuron )
    {
      auto const& inputs = inputs_of.at( id );
      double pair_sum = 0.0;
      for ( std::size_t i = 0; i < inputs.size(); ++i )
      {
        double const activation = result.rates.at( inputs[i].source ) * inputs[i].weight;
        record.index_max[i] = std::max( record.index_max[i], std::fabs( activation ) );
        if ( i < 2 )
          pair_sum += activation;
      }
      record.pair_max = std::max( record.pair_max, std::fabs( pair_sum ) );
    }
  }
  return stats;
}

/*! \brief Stage factors per decomposed neuron plus the global scaling k. */
struct normalization_plan
{
  double k{ 1.0 };
  /*! \brief stage_factors[origin][j-1] = factor of chain stage j */
  std::map<neuron_id, std::vector<double>> stage_factors;
  std::vector<std::string> warnings; //!< dead-activation replacements

  double denorm_factor( neuron_id origin ) const
  {
    auto const it = stage_factors.find( origin );
    return it == stage_factors.end() || it->second.empty() ? 1.0 : it->second.back();
  }
};

/*! \brief Computes stage factors from activation maxima.
 *
 * Stage 1 gets k * max|a_1 + a_2|, stage j > 1 gets k * max|a_{j+1}|.
 * A zero maximum (synapse dead over the whole batch) is replaced by 1
 * with a warning, since dividing by it is the alternative.  Only neurons
 * with fanin >= 2 receive factors; pass-through units keep scale 1.
 */
inline normalization_plan normalization_factors( activation_stats const& stats, double k )
{
  if ( !( k > 0.0 ) )
  {
    throw error( error_code::config, "normalization_factors: k must be positive" );
  }
  normalization_plan plan;
  plan.k = k;
  for ( auto const& [id, record] : stats.by_neuron )
  {
    std::size_t const m = record.index_max.size();
    if ( m < 2 )
      continue;
    std::vector<double> factors( m - 1, 1.0 );
    for ( std::size_t stage = 1; stage <= m - 1; ++stage )
    {
      double const raw = stage == 1 ? record.pair_max : record.index_max[stage];
      if ( raw > 0.0 )
      {
        factors[stage - 1] = k * raw;
      }
      else
      {
        plan.warnings.push_back( "neuron " + std::to_string( id ) + " stage " + std::to_string( stage ) + ": zero activation maximum, factor set to 1" );
      }
    }
    plan.stage_factors[id] = std::move( factors );
  }
  return plan;
}

/*! \brief Assigns stage factors to unit scales.
 *
 * A unit covering chain stages [first, last] takes the factor of its last
 * covered stage; realized weights follow from the scales (see
 * decompose.hpp).  A decomposed unit without a factor in the plan is an
 * error naming the unit.
 */
inline unit_network apply_normalization( unit_network const& unet, normalization_plan const& plan )
{
  unit_network out = unet;
  for ( auto& u : out.units )
  {
    auto const it = plan.stage_factors.find( u.origin );
    if ( it == plan.stage_factors.end() )
    {
      // fanin <= 1 pass-through, stays at scale 1
      continue;
    }
    if ( u.last_stage > it->second.size() )
    {
      throw error( error_code::config, "normalization plan misses a factor for unit " + std::to_string( u.id ) + " (neuron " + std::to_string( u.origin ) + ", stage " + std::to_string( u.last_stage ) + ")" );
    }
    u.scale = it->second[u.last_stage - 1];
  }

  // every decomposed origin must be covered
  for ( auto const& [origin, uid] : out.final_unit )
  {
    auto const* final_u = out.find_unit( uid );
    bool const decomposed = final_u->chain_in.has_value() || final_u->externals.size() >= 2;
    if ( decomposed && plan.stage_factors.count( origin ) == 0 )
    {
      throw error( error_code::config, "normalization plan misses neuron " + std::to_string( origin ) + " (unit " + std::to_string( uid ) + ")" );
    }
  }
  return out;
}

} // namespace fitmap
