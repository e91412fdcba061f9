#!/usr/bin/env python
"""
LabelMM: train classifiers on noisily labeled data with label management.

Usage:
  labelmm synth <output_csv> [--benchmark=<name>] [--n-per-class=<n>]
                [--sigma=<s>] [--seed=<s>] [--debug]
  labelmm inject <input_csv> <output_csv> --gamma=<g> [--seed=<s>]
                 [--flip-log=<path>] [--debug]
  labelmm train [<config>] [--set=<kv>]... [options]
  labelmm sweep [<config>] [--set=<kv>]... [options]
  labelmm selftrain [<config>] [--set=<kv>]... [options]
  labelmm eval <labels_csv> [--psi=<psi_csv>] [--output=<path>] [--debug]
  labelmm --version

Options:
  --benchmark=<name>      Synthetic benchmark: synth:2 or synth:5
                          [default: synth:2].
  --n-per-class=<n>       Samples drawn per class [default: 1450].
  --sigma=<s>             Override the benchmark's standard deviation.
  --seed=<s>              Random seed [default: 0].
  --gamma=<g>             Symmetric noise rate in [0, 1].
  --flip-log=<path>       Flip log path (default: <output_csv>.flips.csv).
  --psi=<psi_csv>         Refurbished labels to apply before auditing.
  --output=<path>         Also write the audit summary to this file.
  --modes=<list>          Training modes: default, lmm,
                          uniform-vote-ablation.
  --seeds=<list>          Comma separated repetition seeds.
  --noise-rate=<g>        Injected symmetric noise rate.
  --noise-rates=<list>    Battery of injected noise rates.
  --epochs=<n>            Training epochs.
  --window-grid=<list>    Sweep grid for the window width T.
  --epsilon-grid=<list>   Sweep grid for the uncertainty threshold.
  --eta-grid=<list>       Sweep grid for eta.
  --fractions=<list>      Labeled fractions for self-training.
  --output-dir=<dir>      Output directory (LABELMM_OUTPUT_DIR wins).
  -s <kv>, --set=<kv>     Override any config key, e.g. --set eta=3.
  --debug                 Debug logging.
  -h --help               Show this screen.
  --version               Show version.

Exit codes: 0 success, 1 usage or config error, 2 data error,
3 numeric failure.
"""
import logging
import os
import sys

from docopt import docopt, DocoptExit

from . import __version__
from .config import ExperimentConfig
from .data import (
    CsvSchema, benchmark_spec, load_csv, split, synth_gaussians, write_csv
)
from .errors import ConfigError, DataError, LabelMMError, NumericError
from .metrics import cohen_kappa, confusion, data_purity, roc_points
from .noise import inject, symmetric_matrix, write_flip_log
from .refurbish import read_refurbished_csv
from .report import (
    aggregate, aggregate_rows, atomic_writer, report_summary, write_confusion,
    write_epochs, write_rows, write_summary
)
from .rng import SeedStream
from .trainer import TrainMode, evaluate, self_train, train

__author__ = "LabelMM developers"

FINAL_METRICS = ('test_acc', 'test_auc', 'test_kappa', 'purity', 'kappa',
                 'psi_size', 'trigger_epoch')

FLAG_KEYS = {
    '--modes': 'modes',
    '--seeds': 'seeds',
    '--noise-rate': 'noise_rate',
    '--noise-rates': 'noise_rates',
    '--epochs': 'epochs',
    '--window-grid': 'window_grid',
    '--epsilon-grid': 'epsilon_grid',
    '--eta-grid': 'eta_grid',
    '--fractions': 'labeled_fractions',
    '--output-dir': 'output_dir',
}


def _tag_number(value):
    return ('%g' % value).replace('.', 'p')


def build_config(args):
    overrides = {}
    for item in args.get('--set') or []:
        if '=' not in item:
            raise ConfigError("--set expects key=value, got %r" % item)
        key, value = item.split('=', 1)
        overrides[key.strip()] = value
    for flag, key in FLAG_KEYS.items():
        if args.get(flag) is not None:
            overrides[key] = args[flag]
    config = ExperimentConfig.from_file(args.get('<config>'), overrides)
    if not os.path.isdir(config.output_dir):
        os.makedirs(config.output_dir)
    config_path = os.path.join(config.output_dir, 'config.txt')
    with atomic_writer(config_path) as handle:
        handle.write(config.dump())
    return config


class Experiment(object):
    """
    Loads the dataset once and prepares noisy splits per (noise rate, seed)
    """

    def __init__(self, config):
        self.config = config
        self._dataset = None

    @property
    def dataset(self):
        if self._dataset is None:
            config = self.config
            if config.is_synthetic:
                spec = benchmark_spec(config.dataset, config.synth_sigma)
                self._dataset = synth_gaussians(spec, config.n_per_class,
                                                config.synth_seed)
            else:
                self._dataset = load_csv(config.dataset, CsvSchema())
        return self._dataset

    def splits(self, noise_rate, seed):
        """ (noisy train, val, test, flip log); noise hits train only """
        train_set, val_set, test_set = split(self.dataset,
                                             self.config.split_spec())
        matrix = symmetric_matrix(train_set.num_classes, noise_rate)
        train_set, flip_log = inject(train_set, matrix, seed)
        if self.config.noisy_val:
            val_seed = SeedStream(seed).child('validation').seed
            val_set, _ = inject(val_set, matrix, val_seed)
        return train_set, val_set, test_set, flip_log

    def output(self, name):
        return os.path.join(self.config.output_dir, name)

    def write_report(self, report, tag, extra=None, train_set=None,
                     test_set=None):
        """
        Epoch series, summary and psi; with the splits also the training
        label confusion against truth before and after refurbishment and,
        for binary tasks, the test ROC points
        """
        write_epochs(report, self.output('%s_epochs.csv' % tag))
        write_summary(self.output('%s_summary.txt' % tag),
                      report_summary(report, extra))
        num_classes = report.params.num_classes
        report.psi.write_csv(self.output('%s_psi.csv' % tag), num_classes)
        if train_set is not None and train_set.has_truth:
            for stage, labels in (('before', train_set.labels),
                                  ('after', report.psi.apply(
                                      train_set.labels))):
                write_confusion(
                    confusion(train_set.truth, labels, num_classes),
                    self.output('%s_confusion_%s.csv' % (tag, stage)))
        if test_set is not None and num_classes == 2:
            _, _, probs = evaluate(report.params, test_set)
            fpr, tpr, thresholds = roc_points(probs[:, 1], test_set.labels)
            write_rows(self.output('%s_roc.csv' % tag),
                       ['fpr', 'tpr', 'threshold'],
                       [{'fpr': f, 'tpr': t, 'threshold': h}
                        for f, t, h in zip(fpr, tpr, thresholds)])


def cmd_synth(args):
    try:
        sigma = float(args['--sigma']) if args['--sigma'] else None
        n_per_class = int(args['--n-per-class'])
        seed = int(args['--seed'])
    except ValueError:
        raise ConfigError("--sigma, --n-per-class and --seed must be numbers")
    dataset = synth_gaussians(benchmark_spec(args['--benchmark'], sigma),
                              n_per_class, seed)
    write_csv(dataset, args['<output_csv>'])
    logging.info("Wrote %d samples to %s", len(dataset), args['<output_csv>'])


def cmd_inject(args):
    try:
        gamma = float(args['--gamma'])
        seed = int(args['--seed'])
    except ValueError:
        raise ConfigError("--gamma and --seed must be numbers")
    dataset = load_csv(args['<input_csv>'])
    matrix = symmetric_matrix(dataset.num_classes, gamma)
    logging.debug("Transition matrix:\n%s", matrix.as_table())
    noisy, flip_log = inject(dataset, matrix, seed)
    write_csv(noisy, args['<output_csv>'])
    flip_path = args['--flip-log'] or args['<output_csv>'] + '.flips.csv'
    write_flip_log(flip_log, flip_path)
    logging.info("Flipped %d of %d labels (%.2f%%)", len(flip_log),
                 len(noisy), 100.0 * len(flip_log) / len(noisy))


def run_battery(experiment):
    """
    Every (noise rate, mode, seed); per-seed artifacts, an aggregate CSV and
    a summary table with one row per noise rate
    """
    config = experiment.config
    aggregate_table, summary_table, failures = [], [], 0
    for noise_rate in config.noise_rate_list():
        table_row = {'noise_rate': noise_rate}
        prepared = {}
        for seed in config.seeds:
            prepared[seed] = experiment.splits(noise_rate, seed)
            write_flip_log(prepared[seed][3], experiment.output(
                'flips_g%s_s%d.csv' % (_tag_number(noise_rate), seed)))
        for mode in config.modes:
            reports = []
            for seed in config.seeds:
                tag = 'train_%s_g%s_s%d' % (mode, _tag_number(noise_rate),
                                            seed)
                train_set, val_set, test_set, flip_log = prepared[seed]
                try:
                    report = train(config.train_config(mode, seed, noise_rate),
                                   train_set, val_set, test_set)
                except NumericError as e:
                    failures += 1
                    logging.error("%s failed: %s", tag, e)
                    continue
                experiment.write_report(report, tag, {
                    'noise_rate': noise_rate,
                    'injected_flips': len(flip_log)},
                    train_set=train_set, test_set=test_set)
                reports.append(report)
            group = {'noise_rate': noise_rate, 'mode': mode,
                     'lmm': int(mode != TrainMode.DEFAULT)}
            aggregate_table.extend(aggregate_rows(group, reports,
                                                  FINAL_METRICS))
            for metric in ('test_acc', 'test_auc', 'purity', 'kappa'):
                mean, std = aggregate([r.final.get(metric) for r in reports])
                table_row['%s_%s' % (mode, metric)] = mean
                table_row['%s_%s_std' % (mode, metric)] = std
        summary_table.append(table_row)

    write_rows(experiment.output('aggregate.csv'),
               ['noise_rate', 'mode', 'lmm', 'metric', 'mean', 'std',
                'seeds'], aggregate_table)
    header = ['noise_rate'] + ['%s_%s%s' % (mode, metric, suffix)
                               for mode in config.modes
                               for metric in ('test_acc', 'test_auc',
                                              'purity', 'kappa')
                               for suffix in ('', '_std')]
    write_rows(experiment.output('summary_table.csv'), header, summary_table)
    return summary_table, failures


def cmd_train(args):
    experiment = Experiment(build_config(args))
    table, failures = run_battery(experiment)
    for row in table:
        logging.info("noise %.2f: %s", row['noise_rate'], ', '.join(
            '%s=%.4f' % (key, value) for key, value in sorted(row.items())
            if key != 'noise_rate' and not key.endswith('_std')))
    if failures:
        logging.error("%d run(s) failed", failures)


SWEEP_HEADER = ['window', 'epsilon', 'eta', 'seed', 'status', 'test_acc',
                'test_auc', 'purity', 'kappa', 'psi_size', 'trigger_epoch']


def run_sweep(experiment):
    config = experiment.config
    managed = [m for m in config.modes if m != TrainMode.DEFAULT]
    mode = managed[0] if managed else TrainMode.LMM
    rows, cells = [], {}
    for window in config.window_grid:
        for epsilon in config.epsilon_grid:
            for eta in config.eta_list():
                cell = (window, epsilon, eta)
                cells[cell] = []
                for seed in config.seeds:
                    train_set, val_set, test_set, _ = experiment.splits(
                        config.noise_rate, seed)
                    row = {'window': window, 'epsilon': epsilon, 'eta': eta,
                           'seed': seed}
                    try:
                        report = train(
                            config.train_config(mode, seed, window=window,
                                                epsilon=epsilon, eta=eta),
                            train_set, val_set, test_set)
                    except LabelMMError as e:
                        logging.error("Cell T=%d eps=%g eta=%g seed %d "
                                      "failed: %s", window, epsilon, eta,
                                      seed, e)
                        row['status'] = 'failed'
                        rows.append(row)
                        continue
                    row['status'] = 'ok'
                    row.update((k, report.final.get(k))
                               for k in SWEEP_HEADER[5:])
                    rows.append(row)
                    cells[cell].append(report.final.get('test_acc'))

    write_rows(experiment.output('sweep.csv'), SWEEP_HEADER, rows)
    scored = [(aggregate(accs)[0], cell) for cell, accs in cells.items()
              if accs]
    best = {}
    if scored:
        # ties keep the earliest cell in grid order
        mean, cell = max(scored, key=lambda item: item[0])
        best = {'window': cell[0], 'epsilon': cell[1], 'eta': cell[2],
                'mean_test_acc': mean, 'cells': len(cells),
                'noise_rate': config.noise_rate, 'mode': mode}
        write_summary(experiment.output('sweep_best.txt'), best)
    return rows, best


def cmd_sweep(args):
    experiment = Experiment(build_config(args))
    rows, best = run_sweep(experiment)
    if best:
        logging.info("Best cell T=%d epsilon=%g eta=%g: mean test acc %.4f",
                     best['window'], best['epsilon'], best['eta'],
                     best['mean_test_acc'])
    else:
        logging.error("Every sweep cell failed")


SELFTRAIN_ARMS = ('control', 'self_training', 'self_training_lmm')


def run_selftrain(experiment):
    config = experiment.config
    rows, curve = [], []
    for fraction in config.labeled_fractions:
        arms = dict((arm, []) for arm in SELFTRAIN_ARMS)
        for seed in config.seeds:
            pool, val_set, test_set, _ = experiment.splits(config.noise_rate,
                                                           seed)
            train_config = config.train_config(TrainMode.LMM, seed)
            tag = 'selftrain_f%s_s%d' % (_tag_number(fraction), seed)
            try:
                plain = self_train(train_config, fraction, pool, val_set,
                                   test_set, refurbish=False)
                managed = self_train(train_config, fraction, pool, val_set,
                                     test_set, refurbish=True,
                                     control=plain.control)
            except NumericError as e:
                logging.error("%s failed: %s", tag, e)
                continue
            results = {'control': plain.control or plain,
                       'self_training': plain,
                       'self_training_lmm': managed}
            for arm in SELFTRAIN_ARMS:
                report = results[arm]
                arms[arm].append(report.final.get('test_acc'))
                rows.append({
                    'labeled_fraction': fraction, 'seed': seed, 'arm': arm,
                    'test_acc': report.final.get('test_acc'),
                    'purity': report.final.get('purity'),
                    'pseudo_label_purity': report.audit.get(
                        'pseudo_label_purity'),
                    'psi_size': report.final.get('psi_size')})
            experiment.write_report(managed, tag + '_lmm')
        point = {'labeled_fraction': fraction}
        for arm in SELFTRAIN_ARMS:
            point[arm], point[arm + '_std'] = aggregate(arms[arm])
        point['lmm_margin'] = point['self_training_lmm'] - point['control']
        logging.info("fraction %.2f: control %.4f, self-training %.4f, "
                     "self-training+LMM %.4f (margin %+.4f)", fraction,
                     point['control'], point['self_training'],
                     point['self_training_lmm'], point['lmm_margin'])
        curve.append(point)

    write_rows(experiment.output('selftrain.csv'),
               ['labeled_fraction', 'seed', 'arm', 'test_acc', 'purity',
                'pseudo_label_purity', 'psi_size'], rows)
    header = ['labeled_fraction'] + [
        arm + suffix for arm in SELFTRAIN_ARMS for suffix in ('', '_std')]
    write_rows(experiment.output('selftrain_curve.csv'),
               header + ['lmm_margin'], curve)
    return rows, curve


def cmd_selftrain(args):
    run_selftrain(Experiment(build_config(args)))


def cmd_eval(args):
    dataset = load_csv(args['<labels_csv>'])
    if not dataset.has_truth:
        raise DataError("%s has no truth_label column" % args['<labels_csv>'])
    labels = dataset.labels
    if args['--psi']:
        psi = read_refurbished_csv(args['--psi'])
        for sample_id in psi:
            if not 0 <= sample_id < len(dataset):
                raise DataError("Refurbished sample %d is not in %s"
                                % (sample_id, args['<labels_csv>']))
        labels = psi.apply(labels)
    matrix = confusion(dataset.truth, labels, dataset.num_classes)
    summary = {
        'samples': len(dataset),
        'purity': data_purity(dataset, labels),
        'kappa': cohen_kappa(labels, dataset.truth, dataset.num_classes),
    }
    print('purity = %.6f' % summary['purity'])
    print('kappa = %.6f' % summary['kappa'])
    print(matrix.as_table())
    if args['--output']:
        write_summary(args['--output'], summary)
    return summary


COMMANDS = (
    ('synth', cmd_synth),
    ('inject', cmd_inject),
    ('train', cmd_train),
    ('sweep', cmd_sweep),
    ('selftrain', cmd_selftrain),
    ('eval', cmd_eval),
)


def main(argv=None):
    try:
        args = docopt(__doc__, argv=argv, version='LabelMM %s' % __version__)
    except DocoptExit as e:
        sys.stderr.write('%s\n' % e)
        return 1

    logging.basicConfig(level=logging.INFO,
                        format='%(asctime)s %(levelname)s %(message)s')
    if args['--debug']:
        logging.getLogger().setLevel(logging.DEBUG)
        logging.log(logging.DEBUG, "Starting Debug Logging")

    for name, command in COMMANDS:
        if args[name]:
            try:
                command(args)
            except LabelMMError as e:
                logging.error("%s: %s", name, e)
                return e.exit_code
            return 0
    return 1


if __name__ == '__main__':
    sys.exit(main())
