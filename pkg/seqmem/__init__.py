# Sequential episodic memory simulation toolkit
