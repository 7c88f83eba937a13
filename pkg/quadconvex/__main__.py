"""Run quadconvex as module."""

from .cli import main

raise SystemExit(main())
