#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "homoenergetic/asymptotics.hpp"
#include "homoenergetic/deformation.hpp"
#include "homoenergetic/geometry.hpp"
#include "homoenergetic/kernel.hpp"
#include "homoenergetic/rng.hpp"

namespace homoenergetic {

struct CollisionStats
{
    std::uint64_t candidates = 0;
    std::uint64_t accepted = 0;
    std::uint64_t majorant_retries = 0;
    std::uint64_t folds = 0;
};

/*!
 * N particle velocities w_i = G xi_i in the deforming frame.
 *
 * The drift w -> Phi w only multiplies the frame matrix G, so it costs O(1);
 * G is folded back into the stored velocities when it drifts far from the
 * identity and before every observation.
 */
class ParticleEnsemble
{
  public:
    ParticleEnsemble(std::vector<Vec3> w, std::uint64_t seed, double t = 0.0, double rho = 1.0);

    std::size_t size() const { return xi_.size(); }
    Vec3 velocity(std::size_t i) const { return G_ * xi_[i]; }
    std::vector<Vec3> velocities() const;
    const Mat3& frame() const { return G_; }

    //! w -> Phi w for every particle.
    void apply_flow(const Mat3& Phi);
    //! Store w = G xi and reset G to the identity.
    void fold();
    //! Kinetic temperature from running sums (exact after a fold).
    double temperature_estimate() const;
    //! Upper bound on |w_i - w_j| over all pairs, without headroom.
    double relative_speed_bound() const;

    //! Replace the pair (i, j) by post-collisional velocities for direction sigma.
    void collide(std::size_t i, std::size_t j, const Vec3& sigma);

    //! Record changes from here on so that rollback() can undo them.
    void begin_transaction();
    void rollback();
    void commit();

    double t;
    double rho;
    Engine rng;
    CollisionStats stats;

  private:
    void set_xi(std::size_t i, const Vec3& x);
    void recompute_sums();

    std::vector<Vec3> xi_;
    Mat3 G_ = Mat3::Identity();
    Mat3 G_inv_ = Mat3::Identity();
    Vec3 center_ = Vec3::Zero();  //!< mean of xi at the last recompute
    double radius_ = 0.0;         //!< max |xi - center| (monotone between recomputes)
    Vec3 sum_ = Vec3::Zero();
    Mat3 sum_sq_ = Mat3::Zero();
    struct Undo
    {
        std::size_t index;
        Vec3 xi;
    };
    struct Snapshot
    {
        double radius;
        Vec3 sum;
        Mat3 sum_sq;
        CollisionStats stats;
    };
    bool journaling_ = false;
    std::vector<Undo> undo_;
    Snapshot snapshot_{};
};

enum class InitialKind
{
    Maxwellian,
    PerturbedMaxwellian
};

struct InitialCondition
{
    InitialKind kind = InitialKind::Maxwellian;
    double T0 = 1000.0;
    Vec3 V0 = Vec3::Zero();
    double amplitude = 0.0;           //!< perturbed mode: covariance T0 (I + amplitude D)
    Mat3 direction = Mat3::Zero();    //!< D = dev sym(direction), unit Frobenius norm
};

/*!
 * Gaussian sample with an exact affine correction: the empirical mean is V0
 * and the empirical temperature is T0.
 */
ParticleEnsemble init_ensemble(std::size_t N, const InitialCondition& init, std::uint64_t seed);

//! Exact flow of the family over [t, t+dt]; updates t and rho.
void drift_step(ParticleEnsemble& ens, const DeformationFamily& family, double dt, double dt_max = INFINITY);

struct CollisionStepOptions
{
    double headroom = 1.1;  //!< majorant = headroom * rigorous pair-speed bound
    int max_retries = 8;
};

/*!
 * Null-collision step: Poisson(N rho 2 pi Mass vmax^gamma dt / 2) candidate
 * pairs, each accepted with probability (|w_i - w_j| / vmax)^gamma.
 * A candidate faster than vmax rolls the step back and retries with a larger
 * majorant (MajorantViolation after max_retries). Returns accepted events.
 */
std::uint64_t collision_step(ParticleEnsemble& ens, const CollisionKernel& kernel, double dt,
                             const CollisionStepOptions& options = {});

struct MacroState
{
    double rho = 1.0;
    Vec3 V = Vec3::Zero();
    double T = 0.0;
    double beta = 0.0;
    Mat3 P = Mat3::Zero();  //!< central second moments
    double alpha = 0.0;     //!< mean(w^ . L w^)/3 of the unit-temperature ensemble
};

MacroState macroscopic(const ParticleEnsemble& ens, const Mat3& L = Mat3::Zero());
MacroState macroscopic(const std::vector<Vec3>& w, double rho = 1.0, const Mat3& L = Mat3::Zero());

//! w^ = (w - V)/sqrt(T): zero mean and unit temperature.
std::vector<Vec3> rescaled_velocities(const std::vector<Vec3>& w, const MacroState& state);

struct PerturbationReport
{
    double measured = 0.0;   //!< int v.A0 v f of the rescaled ensemble, A0 = dev sym A
    double std_err = 0.0;
    double predicted = 0.0;  //!< -a_bar / eta
    double deviation_sigma = 0.0;
    double residual = 0.0;   //!< measured - predicted
};

//! Compare the tensor moment of a rescaled (optionally weighted) sample with -a_bar/eta.
PerturbationReport perturbation_moments(const std::vector<Vec3>& rescaled, const std::vector<double>& weights,
                                        const Mat3& A, double a_bar, double eta);

//! Limiting deformation A0 whose symmetric trace-free part defines a_bar for the family.
Mat3 limit_direction(const DeformationFamily& family);

struct SimulationConfig
{
    CollisionKernel kernel = CollisionKernel::constant_cutoff(0.5);
    DeformationFamily family = DeformationFamily::simple_shear(1.0);
    std::size_t N = 200'000;
    double t_end = 100.0;
    double output_dt = 0.25;
    double dt_max = 0.05;
    double collision_fraction = 0.1;  //!< expected collisions per particle per step
    double drift_fraction = 0.05;     //!< |L|_F dt per step
    double fold_threshold = 0.25;
    std::uint64_t seed = 1;
    double beta0 = 1e-3;
    InitialCondition initial;         //!< T0 is overridden by 1/beta0
    bool entropy = false;
    int entropy_every = 10;
    std::size_t entropy_subsample = 20'000;
    int entropy_bootstrap = 200;
    std::optional<std::pair<double, double>> fit_window;
    double a_bar = 0.0;  //!< 0: computed from the linearized module
    int basis_size = 16;
    CollisionStepOptions collision;
};

struct OutputRow
{
    double t = 0.0;
    MacroState state;
    double beta_pow = 0.0;  //!< beta^(-gamma/2)
    double eta = 0.0;
    double Z = 0.0;
    double entropy = NAN;
    double entropy_err = NAN;
    std::uint64_t collisions = 0;
};

struct SimulationRecord
{
    std::vector<OutputRow> rows;
    double a_bar = 0.0;
    double a_hat = 0.0;
    PredictedLimit predicted;
    double r_integral = 0.0;
    FitResult fit_driven;
    FitResult fit_raw;
    FixedExponentFit prefactor_fit;  //!< driven part against t^exponent
    double log_T_slope = 0.0;        //!< raw log T against log t in the window
    double sandwich_min = 0.0;       //!< min eta/Z
    double sandwich_max = 0.0;
    bool sandwich_ok = false;
    bool fits_available = false;
    CollisionStats stats;
    std::uint64_t seed = 0;
    bool incomplete = false;
    std::string error;
    std::vector<std::string> warnings;
};

using ProgressCallback = std::function<void(const OutputRow&)>;

/*!
 * Strang-split run (half drift, collisions, half drift) from an equilibrium at
 * temperature 1/beta0, recording observables every output_dt.
 * Failures are reported through `incomplete` with the rows gathered so far.
 */
SimulationRecord run_scenario(const SimulationConfig& config, const ProgressCallback& progress = {});

//! Fits and sandwich ratios from recorded rows (also used for replica averages).
void analyse_record(SimulationRecord& record, const SimulationConfig& config);

//! Independent replicas with seeds substream_seed(config.seed, r) on a worker pool.
std::vector<SimulationRecord> run_replicas(const SimulationConfig& config, int replicas, int threads);

//! Row-wise mean of beta^(-gamma/2) and eta across replicas with identical output grids.
SimulationRecord replica_average(const std::vector<SimulationRecord>& replicas, const SimulationConfig& config);

//! CSV with columns t, rho, Vx, Vy, Vz, T, beta, beta_pow, P11..P33, eta, Z, entropy, collisions_accepted.
void write_csv(const SimulationRecord& record, std::ostream& out);

//! beta^(-gamma/2) minus the decayed initial value, i.e. the part generated by the forcing.
std::vector<double> driven_part(const SimulationRecord& record, const SimulationConfig& config);

}  // namespace homoenergetic
