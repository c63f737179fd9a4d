package org.apache.commons.io.input;

import java.io.IOException;
import java.io.Reader;

public class BoundedReader extends Reader {

    private final Reader target;
    private int charsRead;
    private int markedAt = -1;
    private int readAheadLimit;
    private final int maxCharsFromTargetReader;

    public BoundedReader(final Reader target, final int maxCharsFromTargetReader) {
        this.target = target;
        this.maxCharsFromTargetReader = maxCharsFromTargetReader;
    }

    @Override
    public int read() throws IOException {
        if (charsRead >= maxCharsFromTargetReader) {
            return -1;
        }
        if (markedAt >= 0 && charsRead - markedAt >= readAheadLimit) {
            return -1;
        }
        charsRead++;
        return target.read();
    }
}
