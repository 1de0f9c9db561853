import argparse
import csv
import logging

from django.core.management.base import BaseCommand, CommandError
from rest_framework.renderers import JSONRenderer

from core import reports
from core.bodyexpr import BodyExprError
from core.serializers import ReportSerializer
from services.bodies import BodyError
from services.bounds import BoundDomainError
from services.montecarlo import EstimatorCapabilityError, EstimatorInputError

logger = logging.getLogger(__name__)

# Codes retour : 1 vérification en échec, 2 entrée invalide, 3 corps non pris en charge.
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_CAPABILITY = 3


def float_list(raw: str):
    try:
        return [float(item) for item in raw.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"Liste de réels attendue, reçu « {raw} »")


class Command(BaseCommand):
    help = "Laboratoire de volumes intrinsèques : suites exactes, bornes, oracles Monte Carlo et vérification du corpus."

    def add_arguments(self, parser):
        subparsers = parser.add_subparsers(dest="subcommand", required=True)

        for name, help_text in (
            ("exact", "Suite exacte V_0..V_n"),
            ("stats", "W, Delta, variance, entropie, ULC, quermassintégrales"),
            ("maxent", "Comparaison à l'entropie binomiale"),
        ):
            self._body_parser(subparsers, name, help_text)

        bounds = self._body_parser(subparsers, "bounds", "Bornes de variance et de fonction génératrice des moments")
        bounds.add_argument("--grid", type=float_list, help="Grille de theta (défaut : -2..2 par pas de 0.25)")
        bounds.add_argument("--csv", help="Fichier CSV, une ligne par theta")

        tails = self._body_parser(subparsers, "tails", "Masses de queue exactes et bornes")
        tails.add_argument("--grid", type=float_list, help="Grille de t (défaut : 0.5, 1, ..., n)")
        tails.add_argument("--csv", help="Fichier CSV, une ligne par t")

        for name in ("mc-wills", "mc-hmoments"):
            self._mc_parser(subparsers, name, proposal=True)
        kubota = self._mc_parser(subparsers, "mc-kubota", proposal=False)
        kubota.add_argument("--index", "-j", type=int, default=1, help="Indice j du volume intrinsèque")
        for name, proposal in (("mc-steiner", False), ("mc-gf", True), ("mc-beta", True)):
            sub = self._mc_parser(subparsers, name, proposal=proposal)
            sub.add_argument("--lam", type=float, default=1.0, help="Paramètre lambda > 0")
        self._mc_parser(subparsers, "mc-mu", proposal=False)

        verify = subparsers.add_parser("corpus-verify", help="Suite complète d'invariants sur le corpus")
        self._mc_options(verify, proposal=True)
        verify.add_argument("--skip-mc", action="store_true", help="Vérifications exactes uniquement")
        verify.add_argument("--json", action="store_true", help="Sortie JSON")

    def _body_parser(self, subparsers, name, help_text):
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument("body", help="Expression de corps, ex. box:1,2,3")
        sub.add_argument("--json", action="store_true", help="Sortie JSON")
        return sub

    def _mc_parser(self, subparsers, name, proposal):
        sub = self._body_parser(subparsers, name, f"Oracle Monte Carlo {name[3:]}")
        self._mc_options(sub, proposal)
        return sub

    def _mc_options(self, sub, proposal):
        sub.add_argument("--samples", type=int, help="Nombre d'échantillons")
        sub.add_argument("--seed", type=int, help="Graine (entier 64 bits non signé)")
        sub.add_argument("--chunk", type=int, help="Taille des blocs déterministes")
        sub.add_argument("--threads", type=int, help="Threads de calcul")
        if proposal:
            sub.add_argument("--pad", type=float, help="sigma = rayon + pad / lambda")

    def handle(self, *args, **options):
        subcommand = options["subcommand"]
        try:
            report = self._build(subcommand, options)
        except EstimatorCapabilityError as exc:
            raise CommandError(f"Corps non pris en charge : {exc}", returncode=EXIT_CAPABILITY)
        except (BodyExprError, BodyError, BoundDomainError, EstimatorInputError) as exc:
            raise CommandError(f"Entrée invalide : {exc}", returncode=EXIT_USAGE)

        if options.get("csv"):
            self._write_csv(report, options["csv"])

        if options.get("json"):
            payload = JSONRenderer().render(ReportSerializer(report).data)
            self.stdout.write(payload.decode("utf-8"))
        else:
            self._print_report(report, summary_only=subcommand == "corpus-verify")
            if options.get("csv"):
                self.stdout.write(self.style.SUCCESS(f"✅ CSV écrit : {options['csv']} ({len(report.table_rows)} lignes)"))

        failed = report.failures
        if failed:
            raise CommandError(f"{len(failed)} vérification(s) en échec", returncode=EXIT_CHECK_FAILED)

    def _build(self, subcommand, options):
        mc_options = {
            "chunk_size": options.get("chunk"),
            "threads": options.get("threads"),
        }
        if options.get("pad") is not None:
            mc_options["pad"] = options["pad"]

        if subcommand == "corpus-verify":
            return reports.corpus_verify(
                seed=options.get("seed"),
                samples=options.get("samples"),
                skip_mc=options.get("skip_mc", False),
                **mc_options,
            )
        body = options["body"]
        if subcommand == "exact":
            return reports.exact_report(body)
        if subcommand == "stats":
            return reports.stats_report(body)
        if subcommand == "bounds":
            return reports.bounds_report(body, options.get("grid"))
        if subcommand == "tails":
            return reports.tails_report(body, options.get("grid"))
        if subcommand == "maxent":
            return reports.maxent_report(body)

        builder = reports.MC_REPORTS[subcommand]
        extra = {}
        if "index" in options:
            extra["index"] = options["index"]
        if "lam" in options:
            extra["lam"] = options["lam"]
        return builder(body, samples=options.get("samples"), seed=options.get("seed"), **extra, **mc_options)

    def _write_csv(self, report, path):
        if not report.table_header:
            return
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(report.table_header)
            for row in report.table_rows:
                writer.writerow(["" if value is None else repr(float(value)) for value in row])
        logger.info("CSV écrit : %s (%s lignes)", path, len(report.table_rows))

    def _print_report(self, report, summary_only=False):
        self.stdout.write(f"Corps : {report.body}")
        if report.sequence:
            values = ", ".join(f"{v:.12g}" for v in report.sequence)
            self.stdout.write(f"   V : [{values}]")
            self.stdout.write(f"   W = {report.wills:.12g}")
            self.stdout.write(f"   Delta = {report.delta:.12g}")
            self.stdout.write(f"   Var = {report.variance:.12g}")
            self.stdout.write(f"   IntEnt = {report.entropy:.12g}")

        for key, value in report.extras.items():
            if summary_only and key == "bodies":
                continue
            self.stdout.write(f"   {key} : {value}")

        for estimate in report.estimates:
            exact = report.extras.get("exact", {}).get(estimate.estimator_id)
            line = (
                f"   {estimate.estimator_id} = {estimate.value:.10g} ± {estimate.std_error:.3g} "
                f"({estimate.samples} échantillons, graine {estimate.seed})"
            )
            if exact is not None:
                line += f" ; exact {exact:.10g}, écart {estimate.se_distance(exact):.2f} SE"
            self.stdout.write(line)

        for check in report.checks:
            if summary_only and check.passed:
                continue
            self._print_check(check)

        failed = report.failures
        total = len(report.checks)
        if failed:
            self.stdout.write(self.style.ERROR(f"❌ {len(failed)}/{total} vérification(s) en échec"))
        else:
            self.stdout.write(self.style.SUCCESS(f"✅ {total} vérification(s) réussie(s)"))

    def _print_check(self, check):
        detail = f"{check.check_id} (lhs={check.lhs}, rhs={check.rhs})"
        if check.passed:
            self.stdout.write(self.style.SUCCESS(f"   ✅ {detail}"))
        elif check.advisory:
            self.stdout.write(self.style.WARNING(f"   ⚠️  {detail} [indicatif]"))
        else:
            self.stdout.write(self.style.ERROR(f"   ❌ {detail}"))
