#include "ipc/mc_harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

namespace ipc {

void ExperimentPlan::validate() const
{
    if (t_grid.empty())
        throw std::invalid_argument("plan: T grid is empty");
    std::set<std::uint64_t> seen;
    for (auto t : t_grid) {
        if (t == 0)
            throw std::invalid_argument("plan: lengths must be positive");
        if (!seen.insert(t).second)
            throw std::invalid_argument("plan: duplicate length " + std::to_string(t));
        if (t > std::numeric_limits<std::uint32_t>::max())
            throw std::invalid_argument("plan: length exceeds 2^32");
        (void)test_length(t);
    }
    if (ratio_num == 0 || ratio_den == 0)
        throw std::invalid_argument("plan: T'/T ratio must be positive");
    if (trials < 2)
        throw std::invalid_argument("plan: need at least 2 trials per length");
    if (trials > std::numeric_limits<std::uint32_t>::max())
        throw std::invalid_argument("plan: trial count exceeds 2^32");
    if (task.kind == TaskKind::legendre)
        task.legendre.validate();
    if (uses_esn())
        reservoir.validate();
}

std::uint64_t ExperimentPlan::test_length(std::uint64_t train_length) const
{
    if (ratio_num == 0 || ratio_den == 0)
        throw std::invalid_argument("plan: T'/T ratio must be positive");
    const std::uint64_t scaled = train_length * ratio_num;
    if (scaled % ratio_den != 0)
        throw std::invalid_argument("plan: T' = T * " + std::to_string(ratio_num) + "/"
                                    + std::to_string(ratio_den) + " is not an integer for T = "
                                    + std::to_string(train_length));
    return scaled / ratio_den;
}

std::size_t ExperimentPlan::feature_dim() const noexcept
{
    return uses_esn() ? reservoir.nodes + 1 : 1;
}

unsigned ExperimentPlan::threshold_dof() const noexcept
{
    return uses_esn() ? static_cast<unsigned>(reservoir.nodes) : 1U;
}

std::size_t ExperimentPlan::effective_washout() const
{
    if (task.kind == TaskKind::simple)
        return washout;
    return std::max(washout, TargetStream(task).warmup());
}

EsnWeights shared_reservoir(const ExperimentPlan& plan)
{
    Rng rng = make_rng(substream_seed(plan.base_seed, StreamPurpose::reservoir, 0, 0));
    return build_esn(plan.reservoir, rng);
}

namespace {

IpcSamplePair finish(std::uint64_t train_length, std::uint64_t test_length,
                     const MomentAccumulator& train, const MomentAccumulator& test)
{
    IpcSamplePair pair;
    pair.train_length = train_length;
    pair.test_length = test_length;
    const ReadoutSolution readout = solve_readout(train);
    pair.c_train = (train.sum_xy().transpose() * readout.w).trace() / train.sum_y2();
    pair.c_test = test_ipc(readout, test);
    return pair;
}

} // namespace

IpcSamplePair run_trial(const ExperimentPlan& plan, std::uint64_t train_length,
                        std::uint64_t trial_index, const EsnWeights* shared)
{
    const std::uint64_t test_length = plan.test_length(train_length);
    const std::size_t washout = plan.effective_washout();
    const auto length_key = static_cast<std::uint32_t>(train_length);
    const auto index_key = static_cast<std::uint32_t>(trial_index);

    Rng input_rng = make_rng(substream_seed(plan.base_seed, StreamPurpose::input, length_key, index_key));
    const std::vector<double> inputs =
        gen_input(plan.task.input_spec(), washout + train_length + test_length, input_rng);

    MomentAccumulator train(plan.feature_dim(), 1);
    MomentAccumulator test(plan.feature_dim(), 1);
    auto collect = [&](std::size_t t, std::span<const double> feature, double target) {
        if (t < washout)
            return;
        const double y[1] = {target};
        if (t - washout < train_length)
            train.accumulate(feature, y);
        else
            test.accumulate(feature, y);
    };

    if (!plan.uses_esn()) {
        double x = 0.0;
        for (std::size_t t = 0; t < inputs.size(); ++t) {
            x = simple_model_step(x, inputs[t]);
            collect(t, std::span<const double>(&x, 1), simple_model_target(x));
        }
        return finish(train_length, test_length, train, test);
    }

    EsnWeights own;
    if (shared == nullptr) {
        Rng weight_rng =
            make_rng(substream_seed(plan.base_seed, StreamPurpose::reservoir, length_key, index_key));
        own = build_esn(plan.reservoir, weight_rng);
    }
    const EsnWeights& weights = shared ? *shared : own;
    const auto nodes = static_cast<Eigen::Index>(weights.nodes());

    TargetStream task(plan.task);
    Vector state = Vector::Zero(nodes);
    Vector next(nodes);
    Vector feature(nodes + 1);
    feature[nodes] = 1.0;
    double u_prev = 0.0;
    for (std::size_t t = 0; t < inputs.size(); ++t) {
        esn_step(weights, state, std::span<const double>(&u_prev, 1), next);
        state.swap(next);
        task.push(inputs[t]);
        u_prev = inputs[t];
        if (t >= washout) {
            feature.head(nodes) = state;
            collect(t, std::span<const double>(feature.data(), static_cast<std::size_t>(feature.size())),
                    task.target());
        }
    }
    return finish(train_length, test_length, train, test);
}

Summary summarize(std::span<const double> values)
{
    if (values.size() < 2)
        throw std::invalid_argument("summarize: need at least 2 values for an unbiased variance");
    const auto n = static_cast<double>(values.size());
    double sum = 0.0;
    for (double v : values)
        sum += v;
    const double mean0 = sum / n;

    // Corrected two-pass: the second term removes the rounding error of mean0.
    double dev = 0.0, dev2 = 0.0;
    for (double v : values) {
        dev += v - mean0;
        dev2 += (v - mean0) * (v - mean0);
    }
    Summary s;
    s.mean = mean0 + dev / n;
    s.variance = std::max(0.0, (dev2 - dev * dev / n) / (n - 1.0));
    return s;
}

SummaryRow summarize_pairs(std::uint64_t train_length, std::uint64_t test_length,
                           std::span<const IpcSamplePair> pairs, std::uint64_t failures)
{
    std::vector<double> c_train, c_test;
    c_train.reserve(pairs.size());
    c_test.reserve(pairs.size());
    for (const auto& p : pairs) {
        c_train.push_back(p.c_train);
        c_test.push_back(p.c_test);
    }
    const Summary tr = summarize(c_train);
    const Summary te = summarize(c_test);

    SummaryRow row;
    row.train_length = train_length;
    row.test_length = test_length;
    row.trials = pairs.size();
    row.mean_train = tr.mean;
    row.var_train = tr.variance;
    row.mean_test = te.mean;
    row.var_test = te.variance;
    row.err_var_train = std::sqrt(variance_of_variance(tr.variance, row.trials));
    row.err_var_test = std::sqrt(variance_of_variance(te.variance, row.trials));
    row.failures = failures;
    return row;
}

unsigned resolve_thread_count(unsigned requested) noexcept
{
    if (requested > 0)
        return requested;
    return std::max(1U, std::thread::hardware_concurrency());
}

ExperimentResult run_experiment(const ExperimentPlan& plan)
{
    plan.validate();
    std::vector<std::uint64_t> grid = plan.t_grid;
    std::sort(grid.begin(), grid.end());

    std::optional<EsnWeights> shared;
    if (plan.uses_esn() && plan.fix_reservoir)
        shared = shared_reservoir(plan);

    struct Slot {
        IpcSamplePair pair;
        bool failed = false;
        std::string error;
    };
    const std::size_t per_length = plan.trials;
    std::vector<Slot> slots(grid.size() * per_length);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t job = next.fetch_add(1); job < slots.size(); job = next.fetch_add(1)) {
            const std::uint64_t length = grid[job / per_length];
            const std::uint64_t index = job % per_length;
            try {
                slots[job].pair = run_trial(plan, length, index, shared ? &*shared : nullptr);
            } catch (const TaskDivergence& e) {
                slots[job].failed = true;
                slots[job].error = e.what();
            }
        }
    };

    const unsigned threads = std::min<std::size_t>(resolve_thread_count(plan.threads), slots.size());
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (unsigned i = 0; i < threads; ++i)
            pool.emplace_back(worker);
    }

    ExperimentResult result;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        std::vector<IpcSamplePair> pairs;
        pairs.reserve(per_length);
        std::uint64_t failures = 0;
        std::string first_error;
        for (std::size_t i = 0; i < per_length; ++i) {
            const Slot& s = slots[g * per_length + i];
            if (s.failed) {
                if (failures++ == 0)
                    first_error = s.error;
            } else {
                pairs.push_back(s.pair);
            }
        }
        if (static_cast<double>(failures) > 0.01 * static_cast<double>(per_length) || pairs.size() < 2)
            throw ExperimentFailure("T = " + std::to_string(grid[g]) + ": " + std::to_string(failures)
                                    + " of " + std::to_string(per_length)
                                    + " trials failed (first: " + first_error + ")");
        result.rows.push_back(summarize_pairs(grid[g], plan.test_length(grid[g]), pairs, failures));
        if (plan.retain_values)
            result.retained.push_back(std::move(pairs));
    }
    return result;
}

std::vector<MeanSample> mean_samples(std::span<const SummaryRow> rows)
{
    std::vector<MeanSample> out;
    for (const auto& r : rows)
        out.push_back({static_cast<double>(r.train_length), static_cast<double>(r.test_length),
                       r.mean_train, r.mean_test, r.trials});
    return out;
}

std::vector<VarSample> var_samples(std::span<const SummaryRow> rows)
{
    std::vector<VarSample> out;
    for (const auto& r : rows)
        out.push_back({static_cast<double>(r.train_length), static_cast<double>(r.test_length),
                       r.var_train, r.var_test, r.trials});
    return out;
}

void write_results_csv(std::ostream& os, std::span<const SummaryRow> rows)
{
    os << results_csv_magic << '\n' << results_csv_header << '\n';
    os << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const auto& r : rows)
        os << r.train_length << ',' << r.test_length << ',' << r.trials << ',' << r.mean_train << ','
           << r.var_train << ',' << r.mean_test << ',' << r.var_test << ',' << r.err_var_train << ','
           << r.err_var_test << ',' << r.failures << '\n';
}

void write_results_csv(const std::filesystem::path& path, std::span<const SummaryRow> rows)
{
    std::ofstream os(path);
    if (!os)
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_results_csv(os, rows);
}

std::vector<SummaryRow> read_results_csv(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line))
        throw std::runtime_error("results CSV is empty");
    if (line != results_csv_magic)
        throw std::runtime_error("results CSV: unsupported version line '" + line + "'");
    if (!std::getline(is, line) || line != results_csv_header)
        throw std::runtime_error("results CSV: unexpected column header");

    std::vector<SummaryRow> rows;
    while (std::getline(is, line)) {
        if (line.empty())
            continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            cells.push_back(cell);
        if (cells.size() != 10)
            throw std::runtime_error("results CSV: expected 10 columns, got " + std::to_string(cells.size()));
        SummaryRow r;
        try {
            r.train_length = std::stoull(cells[0]);
            r.test_length = std::stoull(cells[1]);
            r.trials = std::stoull(cells[2]);
            r.mean_train = std::stod(cells[3]);
            r.var_train = std::stod(cells[4]);
            r.mean_test = std::stod(cells[5]);
            r.var_test = std::stod(cells[6]);
            r.err_var_train = std::stod(cells[7]);
            r.err_var_test = std::stod(cells[8]);
            r.failures = std::stoull(cells[9]);
        } catch (const std::logic_error&) {
            throw std::runtime_error("results CSV: malformed number in line '" + line + "'");
        }
        rows.push_back(r);
    }
    return rows;
}

std::vector<SummaryRow> read_results_csv(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is)
        throw std::runtime_error("cannot open " + path.string());
    return read_results_csv(is);
}

} // namespace ipc
