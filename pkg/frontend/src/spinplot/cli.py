"""spinplot JOBFILE: render every job in a JSON job list."""

from __future__ import annotations

import json
import sys

from spinplot.jobs import load_jobs
from spinplot.render import render


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 1 or argv[0] in ("-h", "--help"):
        sys.stderr.write("usage: spinplot JOBFILE\n")
        return 2
    try:
        jobs = load_jobs(argv[0])
        for job in jobs:
            path = render(job)
            sys.stdout.write(f"rendered {job.kind} -> {path}\n")
    except (ValueError, KeyError, OSError) as exc:
        sys.stderr.write(json.dumps({"error": "schema", "message": str(exc)}) + "\n")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
