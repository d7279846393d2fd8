from geomis.cli import main

raise SystemExit(main())
