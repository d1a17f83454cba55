from rewindq.cli import main

raise SystemExit(main())
