from qamlab.cli import main

raise SystemExit(main())
