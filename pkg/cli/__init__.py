from cli.commands import build_parser, run_command
from cli.report import RunReport, emit_report
