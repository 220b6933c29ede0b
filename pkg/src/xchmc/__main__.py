from xchmc.cli import main

raise SystemExit(main())
