using System;

namespace Demo
{
    public class Logger
    {
        private static readonly string Prefix = "[log] ";
        private static readonly int MaxLines = 100;
        private int lines;

        public void Info(string message)
        {
            if (lines < MaxLines)
            {
                Console.WriteLine(Prefix + message);
                lines = lines + 1;
            }
        }

        public int GetLines()
        {
            return lines;
        }
    }
}
