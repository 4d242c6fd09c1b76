import logging

from django.core.management.base import BaseCommand, CommandError
from rest_framework.exceptions import ValidationError

from ebsum import families, suites, transport
from ebsum.conf import ebsum_settings
from ebsum.darroch import finitary_bounds
from ebsum.ebs_core import mean, pmf_dp, pmf_symmetric
from ebsum.exceptions import (
    BudgetExceeded, ContractViolation, DegenerateMode, InvalidArgument, NoImprovement,
    UnsupportedFamily,
)
from ebsum.modal_analysis import crossing_height, median_interval, mode_of
from ebsum.serializers import (
    CaseResultSerializer, CrossModalEntrySerializer, CrossModalReportSerializer,
    FamilySpecSerializer, MedianIntervalSerializer, ModeSummarySerializer, PmfSerializer,
    ProfileSerializer, RidgeRowSerializer, TransportPlanSerializer,
)
from ebsum.utils import (
    FAMILY_NAMES, parse_family, parse_number, parse_profile, parse_tgrid, render_json,
    render_table, write_output,
)

logger = logging.getLogger(__name__)

EXIT_FAILURE = 1
EXIT_PARSE = 2
EXIT_BUDGET = 3
EXIT_UNSUPPORTED = 4

SUITES = ("darroch", "integer-mean", "finitary", "crossmodal", "transport", "lemma1")
CASE_COLUMNS = ["seed", "case", "profile_hash", "mu", "m_minus", "m_plus", "detail", "pass"]
CROSSMODAL_COLUMNS = ["k", "ell_lo", "ell_hi", "m_lo", "m_hi", "pass"]
RIDGE_COLUMNS = ["parameter", "mean", "m_minus", "m_plus", "peak", "ell_lo", "ell_hi"]
PLAN_COLUMNS = ["kind", "mode", "cost", "s", "delta", "gamma", "alphas", "rate", "residual"]
TRANSPORT_CHECK_COLUMNS = [
    "mode", "A", "B", "C", "gamma_star", "two_point_s", "two_point_cost",
    "two_bernoulli_alpha", "two_bernoulli_cost", "grid_cost", "detail", "pass",
]
MODE_COLUMNS = [
    "mean", "m_minus", "m_plus", "twin", "degenerate", "peak", "skewness", "crossing",
    "median_lo", "median_hi",
]
DEFAULT_RIDGE_NMAX = 30
DEFAULT_KMAX = 20
DEFAULT_BOUNDS_NMAX = 6


class Command(BaseCommand):
    help = "Extended Bernoulli sums: probability functions, modes, family scans and property suites."

    def add_arguments(self, parser):
        subparsers = parser.add_subparsers(dest="subcommand", required=True)

        pmf = self._subparser(subparsers, "pmf", "Probability function of a profile.")
        pmf.add_argument("--profile", required=True)
        pmf.add_argument("--engine", choices=("dp", "symmetric"), default="dp")

        mode = self._subparser(subparsers, "mode", "Modes, peak, skewness and medians of a profile.")
        mode.add_argument("--profile", required=True)

        ridge = self._subparser(subparsers, "ridge", "Modal ridge of a parametric family.")
        self._family_arguments(ridge)
        ridge.add_argument("--nmax", type=int)
        ridge.add_argument("--tgrid")

        scan = self._subparser(subparsers, "scan", "Likelihood maximizers and their modes per k.")
        self._family_arguments(scan)
        scan.add_argument("--kmin", type=int, default=0)
        scan.add_argument("--kmax", type=int, default=DEFAULT_KMAX)

        check = self._subparser(subparsers, "check", "Run a property suite; exit 1 on any failure.")
        check.add_argument("suite", choices=SUITES)
        self._family_arguments(check, required=False)
        check.add_argument("--seed", type=int)
        check.add_argument("--cases", type=int)
        check.add_argument("--kmax", type=int, default=DEFAULT_KMAX)

        plan = self._subparser(subparsers, "transport", "Cheapest additions moving the leading mode up.")
        plan.add_argument("--profile")
        plan.add_argument("--t", help="Poisson rate, instead of --profile")

        bounds = self._subparser(subparsers, "bounds", "Extreme means on the mode bifurcation sets.")
        bounds.add_argument("--nmax", type=int, default=DEFAULT_BOUNDS_NMAX)
        bounds.add_argument("--seed", type=int)
        bounds.add_argument("--cases", type=int)

    def _subparser(self, subparsers, name, help_text):
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument("--eps", type=float)
        sub.add_argument("--tie-tol", type=float, dest="tie_tol")
        sub.add_argument("--format", choices=("csv", "json"), dest="fmt")
        sub.add_argument("--out")
        return sub

    def _family_arguments(self, parser, required=True):
        parser.add_argument("--family", choices=FAMILY_NAMES, required=required)
        parser.add_argument("--p")
        parser.add_argument("--n", type=int)
        parser.add_argument("--t")
        parser.add_argument("--profile")

    # --------------------------------------------------
    # Dispatch
    # --------------------------------------------------

    def handle(self, *args, **options):
        for key, setting in (("eps", "EPS"), ("tie_tol", "TIE_TOL"), ("fmt", "DEFAULT_FORMAT")):
            if options.get(key) is None:
                options[key] = getattr(ebsum_settings, setting)
        handler = getattr(self, "handle_" + options["subcommand"])
        try:
            handler(options)
        except CommandError:
            raise
        except (InvalidArgument, DegenerateMode, ValidationError) as exc:
            raise CommandError(str(exc), returncode=EXIT_PARSE)
        except BudgetExceeded as exc:
            raise CommandError(str(exc), returncode=EXIT_BUDGET)
        except UnsupportedFamily as exc:
            raise CommandError(str(exc), returncode=EXIT_UNSUPPORTED)
        except ContractViolation as exc:
            logger.error("internal check failed: %s", exc)
            raise CommandError(str(exc), returncode=EXIT_FAILURE)

    def _emit(self, options, rows, columns, document=None):
        if options["fmt"] == "json":
            text = render_json(rows if document is None else document)
        else:
            text = render_table(rows, "csv", columns)
        write_output(self.stdout, text, options.get("out"))

    def _family(self, options):
        if not options.get("family"):
            raise InvalidArgument("--family is required")
        return parse_family(
            options["family"], p=options.get("p"), n=options.get("n"), t=options.get("t"),
            profile=options.get("profile"), n_max=ebsum_settings.SCAN_NMAX,
            tie_tol=options["tie_tol"],
        )

    def _require_seed(self, options, what):
        if options.get("seed") is None:
            raise CommandError(f"{what} is randomized and needs --seed", returncode=EXIT_PARSE)
        return options["seed"]

    def _fail_on(self, rows, label):
        failed = [row for row in rows if not row.passed]
        if failed:
            first = failed[0]
            raise CommandError(
                f"{len(failed)} of {len(rows)} {label} failed; first: {first}", returncode=EXIT_FAILURE,
            )

    # --------------------------------------------------
    # Subcommands
    # --------------------------------------------------

    def handle_pmf(self, options):
        profile = parse_profile(options["profile"])
        engine = pmf_symmetric if options["engine"] == "symmetric" else pmf_dp
        pmf = engine(profile, options["eps"])
        rows = [
            {"k": k, "mass": float(m), "trunc_err": pmf.trunc_err}
            for k, m in zip(pmf.support, pmf.mass)
        ]
        document = {"profile": ProfileSerializer(profile).data, **PmfSerializer(pmf).data}
        self._emit(options, rows, ["k", "mass", "trunc_err"], document)

    def handle_mode(self, options):
        profile = parse_profile(options["profile"])
        pmf = pmf_dp(profile, options["eps"])
        summary = mode_of(pmf, options["tie_tol"])
        median = median_interval(pmf)
        crossing = None
        if not (summary.twin or summary.degenerate):
            crossing = crossing_height(pmf, options["tie_tol"])
        row = {
            "mean": mean(profile), "m_minus": summary.m_minus, "m_plus": summary.m_plus,
            "twin": summary.twin, "degenerate": summary.degenerate, "peak": summary.peak,
            "skewness": summary.skewness, "crossing": crossing,
            "median_lo": median.lo, "median_hi": median.hi,
        }
        document = {
            "profile": ProfileSerializer(profile).data,
            "mean": row["mean"],
            "mode": ModeSummarySerializer(summary).data,
            "median": MedianIntervalSerializer(median).data,
            "crossing_height": crossing,
        }
        self._emit(options, [row], MODE_COLUMNS, document)

    def handle_ridge(self, options):
        family = self._family(options)
        if isinstance(family, (families.BinomialP, families.StirlingSecond)):
            raise UnsupportedFamily(f"ridge is not available for the {family.tag} family")
        if family.parameter == "n":
            first = 1 if isinstance(family, families.KaramataStirling) else 0
            grid = range(first, (options.get("nmax") or DEFAULT_RIDGE_NMAX) + 1)
        else:
            if not options.get("tgrid"):
                raise InvalidArgument(f"--family {family.tag} needs --tgrid lo:hi:step")
            grid = parse_tgrid(options["tgrid"])

        rows = []
        for theta in grid:
            pmf = family.pmf_at(theta, options["eps"])
            modes = tuple(family.modes_at(theta))
            ell = family.maximizers(max(modes))
            rows.append({
                "parameter": theta, "mean": family.mean_at(theta),
                "m_minus": min(modes), "m_plus": max(modes), "peak": pmf.peak,
                "ell_lo": min(ell), "ell_hi": max(ell),
            })
        data = RidgeRowSerializer(rows, many=True).data
        document = {"family": FamilySpecSerializer(family).data, "rows": data}
        self._emit(options, data, RIDGE_COLUMNS, document)

    def handle_scan(self, options):
        family = self._family(options)
        report = families.cross_modality_scan(family, options["kmin"], options["kmax"])
        self._emit_crossmodal(options, family, report)

    def _emit_crossmodal(self, options, family, report):
        rows = CrossModalEntrySerializer(report.entries, many=True).data
        document = {"family": FamilySpecSerializer(family).data, **CrossModalReportSerializer(report).data}
        self._emit(options, rows, CROSSMODAL_COLUMNS, document)

    def handle_check(self, options):
        suite = options["suite"]
        if suite == "crossmodal":
            return self._check_crossmodal(options)
        if suite == "transport" and options.get("profile"):
            return self._check_transport_profile(options)

        seed = self._require_seed(options, f"check {suite}")
        kwargs = {"eps": options["eps"], "tie_tol": options["tie_tol"]}
        if options.get("cases") is not None:
            kwargs["cases"] = options["cases"]
        runner = {
            "darroch": suites.darroch_suite,
            "integer-mean": suites.integer_mean_suite,
            "finitary": suites.finitary_suite,
            "transport": suites.transport_suite,
            "lemma1": suites.ebs_properties_suite,
        }[suite]
        rows = runner(seed, **kwargs)
        self._emit(options, CaseResultSerializer(rows, many=True).data, CASE_COLUMNS)
        self._fail_on(rows, "cases")

    def _check_crossmodal(self, options):
        family = self._family(options)
        if isinstance(family, families.StirlingSecond):
            raise UnsupportedFamily("stirling-second is scanned only; use `scan` instead")
        series = family.series if isinstance(family, families.ScaledEBS) else family
        if isinstance(series, families.PowerSeries):
            report = families.psd_cross_modal_check(series, options["kmax"], tie_tol=options["tie_tol"])
            passed = report.all_pass and all(report.conditions.values())
        else:
            report = families.cross_modality_scan(family, 0, options["kmax"])
            passed = report.all_pass
        self._emit_crossmodal(options, family, report)
        if not passed:
            failing = [e.k for e in report.entries if not e.passed]
            raise CommandError(
                f"{family.tag} is not cross modal: failing k {failing}, conditions {report.conditions}",
                returncode=EXIT_FAILURE,
            )

    def _check_transport_profile(self, options):
        profile = parse_profile(options["profile"])
        pmf = pmf_dp(profile, options["eps"])
        report = suites.transport_report(pmf, options["tie_tol"])
        coefficients = report.coefficients
        double = report.two_bernoulli
        row = {
            "mode": report.mode,
            "A": coefficients.A if coefficients else None,
            "B": coefficients.B if coefficients else None,
            "C": coefficients.C if coefficients else None,
            "gamma_star": report.one_bernoulli.cost,
            "two_point_s": report.two_point.s,
            "two_point_cost": report.two_point.cost,
            "two_bernoulli_alpha": double.alphas[0] if double else None,
            "two_bernoulli_cost": double.cost if double else None,
            "grid_cost": report.grid_cost,
            "detail": "; ".join(report.failures),
            "pass": not report.failures,
        }
        self._emit(options, [row], TRANSPORT_CHECK_COLUMNS, row)
        if report.failures:
            raise CommandError("; ".join(report.failures), returncode=EXIT_FAILURE)

    def handle_transport(self, options):
        eps, tie_tol = options["eps"], options["tie_tol"]
        if options.get("profile"):
            pmf = pmf_dp(parse_profile(options["profile"]), eps)
            plans = [transport.optimal_two_point(pmf, tie_tol), transport.one_bernoulli_plan(pmf, tie_tol)]
            if not mode_of(pmf, tie_tol).twin:
                try:
                    plans.append(transport.two_bernoulli_plan(pmf, tie_tol))
                except NoImprovement as exc:
                    logger.info("%s", exc)
        elif options.get("t"):
            t = parse_number(options["t"], "--t")
            pmf = families.poisson_pmf(t, eps)
            plans = [
                transport.optimal_two_point(pmf, tie_tol),
                transport.poisson_break(t, eps),
                transport.poisson_rate_plan(t, eps),
            ]
        else:
            raise InvalidArgument("transport needs --profile or --t")

        data = TransportPlanSerializer(plans, many=True).data
        rows = [{**row, "alphas": " ".join(f"{a:.17g}" for a in row["alphas"])} for row in data]
        self._emit(options, rows, PLAN_COLUMNS, data)

    def handle_bounds(self, options):
        n_max = options["nmax"]
        if n_max < 1:
            raise InvalidArgument(f"--nmax must be positive, got {n_max}")
        pairs = suites.finitary_pairs(n_max)
        rows = []
        for k, n in pairs:
            b = finitary_bounds(k, n)
            rows.append({"k": k, "n": n, "min_mu": b.min_mu, "max_mu": b.max_mu})
        columns = ["k", "n", "min_mu", "max_mu"]

        results = []
        if options.get("seed") is not None or options.get("cases") is not None:
            seed = self._require_seed(options, "bounds with --cases")
            kwargs = {"n_max": n_max, "eps": options["eps"], "tie_tol": options["tie_tol"]}
            if options.get("cases") is not None:
                kwargs["cases"] = options["cases"]
            results = suites.finitary_suite(seed, **kwargs)
            columns += ["samples", "observed_min", "observed_max", "pass"]
            for j, row in enumerate(rows):
                hits = results[j::len(pairs)]
                row["samples"] = len(hits)
                row["observed_min"] = min((r.mu for r in hits), default=None)
                row["observed_max"] = max((r.mu for r in hits), default=None)
                row["pass"] = all(r.passed for r in hits)
        self._emit(options, rows, columns)
        self._fail_on(results, "random samples")
